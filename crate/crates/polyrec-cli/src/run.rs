//! Subcommand dispatch: each arm parses its inputs, calls the library,
//! and renders one deterministic artifact string.

use num_bigint::BigInt;
use rand_core::{RngCore, SeedableRng};

use polyrec_core::arcs::{
    in_frak_M, in_omega, in_pulled_back_omega, overlap_count, trapped_index, ArcSystem,
};
use polyrec_core::construct::{
    counterexample_build, counterexample_verify, lift_finite, verify_lift_inclusion,
    GeneratorSpec,
};
use polyrec_core::profile::{gap_stats, khintchine_experiment, optimal_returns, profile_fft};
use polyrec_core::smooth::dichotomy_report;
use polyrec_core::spectral::{
    average_count_identity, box_region_mass, riemann_mass, BoxRegion, QuadratureMode, TorusBox,
};
use polyrec_core::torus::{rat_to_f64, TorusPoint};
use polyrec_core::weyl::{
    minor_arc_scan, relation_residuals, scan_ratio, weyl_s, weyl_s_div, weyl_s_window,
};
use polyrec_core::{Error, Rat, Result};

use crate::args::*;
use crate::formats;
use crate::output::{self, SCHEMA_VERSION};

/// Runs one parsed invocation and returns the artifact text.
pub fn dispatch(cli: &Cli) -> Result<String> {
    if cli.threads == Some(0) {
        return Err(Error::Parse("--threads must be >= 1".into()));
    }
    match &cli.command {
        Command::Profile(a) => profile_cmd(a),
        Command::Returns(a) => returns_cmd(a),
        Command::Weyl(WeylCmd::Eval(a)) => weyl_eval_cmd(a),
        Command::Weyl(WeylCmd::Relations(a)) => weyl_relations_cmd(a),
        Command::Weyl(WeylCmd::Scan(a)) => weyl_scan_cmd(a),
        Command::Arcs(ArcsCmd::Member(a)) => arcs_member_cmd(a),
        Command::Arcs(ArcsCmd::Overlap(a)) => arcs_overlap_cmd(a),
        Command::Spectral(SpectralCmd::Identity(a)) => spectral_identity_cmd(a),
        Command::Spectral(SpectralCmd::Mass(a)) => spectral_mass_cmd(a),
        Command::Dichotomy(a) => dichotomy_cmd(a),
        Command::Lift(a) => lift_cmd(a),
        Command::Counterexample(CounterexampleCmd::Build(a)) => counterexample_build_cmd(a),
        Command::Counterexample(CounterexampleCmd::Verify(a)) => counterexample_verify_cmd(a),
        Command::Experiment(ExperimentCmd::Khintchine(a)) => khintchine_cmd(a),
    }
}

fn profile_cmd(a: &ProfileArgs) -> Result<String> {
    let set = formats::read_dense_set(&a.set)?;
    let p = formats::parse_poly(&a.poly)?;
    let prof = profile_fft(&set, &p, a.l)?;
    Ok(match a.format {
        OutputFormat::Csv => output::profile_csv(&prof, &p)?,
        OutputFormat::Json => output::to_json(&output::ProfileJson {
            schema_version: SCHEMA_VERSION,
            universe_size: prof.universe_size,
            set_cardinality: prof.set_cardinality,
            range_end: prof.counts.len() as u64 - 1,
            counts: prof.counts,
        }),
        OutputFormat::Svg => output::profile_svg(&prof),
    })
}

fn returns_cmd(a: &ReturnsArgs) -> Result<String> {
    let set = formats::read_dense_set(&a.set)?;
    let p = formats::parse_poly(&a.poly)?;
    let eps = formats::parse_rat(&a.eps)?;
    let prof = profile_fft(&set, &p, a.l)?;
    let rts = optimal_returns(&prof, &eps)?;
    let stats = gap_stats(&rts);
    Ok(output::to_json(&output::ReturnsJson {
        schema_version: SCHEMA_VERSION,
        epsilon: output::rat_str(&rts.epsilon),
        range_end: rts.range_end,
        times: rts.times,
        stats: output::ReturnStatsJson {
            count: stats.count,
            density: stats.density,
            max_gap: stats.max_gap,
            positive_count: stats.positive_count,
            positive_density: stats.positive_density,
            positive_max_gap: stats.positive_max_gap,
        },
    }))
}

fn weyl_eval_cmd(a: &WeylEvalArgs) -> Result<String> {
    let alpha = formats::parse_point(&a.alpha)?;
    if let Some(k) = a.k {
        if k != alpha.dim() {
            return Err(Error::Parse(format!(
                "--k {k} disagrees with the {}-coordinate --alpha",
                alpha.dim()
            )));
        }
    }
    let value = match (a.lambda, a.q) {
        (None, None) => weyl_s(a.mu, &alpha)?,
        (Some(lambda), None) => weyl_s_window(lambda, a.mu, &alpha)?,
        (Some(lambda), Some(q)) => weyl_s_div(lambda, a.mu, q, &alpha)?,
        (None, Some(_)) => {
            return Err(Error::Parse(
                "--q selects the stride-restricted sum and needs --lambda".into(),
            ))
        }
    };
    Ok(output::to_json(&output::WeylEvalJson {
        schema_version: SCHEMA_VERSION,
        re: value.re,
        im: value.im,
        abs: value.norm(),
    }))
}

/// Uniform rational points with denominator 2^16 per axis.
fn random_points(k: usize, samples: u32, seed: u64) -> Vec<TorusPoint> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let coords = (0..k)
                .map(|_| Rat::new(BigInt::from(rng.next_u64() & 0xFFFF), BigInt::from(1u64 << 16)))
                .collect();
            TorusPoint::new(coords).expect("k >= 1 validated upstream")
        })
        .collect()
}

fn weyl_relations_cmd(a: &WeylRelationsArgs) -> Result<String> {
    if a.k == 0 {
        return Err(Error::Parse("--k must be >= 1".into()));
    }
    let samples = random_points(a.k, a.samples, a.seed);
    let res = relation_residuals(a.lambda, a.mu, a.q, &samples)?;
    Ok(output::to_json(&output::WeylRelationsJson {
        schema_version: SCHEMA_VERSION,
        k: a.k,
        lambda: a.lambda,
        mu: a.mu,
        q: a.q,
        samples: a.samples,
        max_r1: res.max_r1,
        max_r2: res.max_r2,
        max_r3: res.max_r3,
    }))
}

fn weyl_scan_cmd(a: &WeylScanArgs) -> Result<String> {
    let eta = formats::parse_rat(&a.eta)?;
    let report = minor_arc_scan(&eta, a.mu, a.k, a.samples, a.seed)?;
    let ratio = scan_ratio(&report, &eta);
    Ok(output::to_json(&output::WeylScanJson {
        schema_version: SCHEMA_VERSION,
        max_abs: report.max_abs,
        argmax: report.argmax.coords().iter().map(output::rat_str).collect(),
        kept: report.kept,
        discarded: report.discarded,
        ratio,
    }))
}

fn arcs_member_cmd(a: &ArcsMemberArgs) -> Result<String> {
    let eta = formats::parse_rat(&a.eta)?;
    let alpha = formats::parse_point(&a.alpha)?;
    if alpha.dim() != a.k {
        return Err(Error::Parse(format!(
            "--k {} disagrees with the {}-coordinate --alpha",
            a.k,
            alpha.dim()
        )));
    }
    let sys = ArcSystem::new(eta.clone(), a.k, BigInt::from(a.lambda), BigInt::from(a.mu))?;
    let in_mfrak = in_frak_M(&alpha, &eta, &BigInt::from(a.mu), a.k);
    let in_om = in_omega(&alpha, &sys)?;
    let in_pb = in_pulled_back_omega(&alpha, &sys)?;
    // The trapped-axis witness only exists under its lemma's scale bound;
    // outside that regime the verdict reports null rather than failing.
    let bound = Rat::new(BigInt::from(1), BigInt::from(4 * a.k as u64 * a.k as u64));
    let trapped = if eta < bound {
        trapped_index(&alpha, &sys)?.map(|w| output::TrappedJson {
            axis: w.axis,
            lower: output::rat_str(&w.lower),
            upper: output::rat_str(&w.upper),
            distance: output::rat_str(&w.distance),
        })
    } else {
        None
    };
    Ok(output::to_json(&output::ArcsMemberJson {
        schema_version: SCHEMA_VERSION,
        in_mfrak,
        in_omega: in_om,
        in_pulled_back: in_pb,
        trapped_axis: trapped,
    }))
}

fn arcs_overlap_cmd(a: &ArcsOverlapArgs) -> Result<String> {
    let eta = formats::parse_rat(&a.eta)?;
    let alpha = formats::parse_point(&a.alpha)?;
    if alpha.dim() != a.k {
        return Err(Error::Parse(format!(
            "--k {} disagrees with the {}-coordinate --alpha",
            a.k,
            alpha.dim()
        )));
    }
    let windows = formats::parse_windows(&a.windows)?;
    let count = overlap_count(&alpha, &eta, &windows)?;
    Ok(output::to_json(&output::ArcsOverlapJson {
        schema_version: SCHEMA_VERSION,
        windows: windows.len(),
        count,
    }))
}

fn spectral_identity_cmd(a: &SpectralIdentityArgs) -> Result<String> {
    let b = formats::read_grid_set(&a.grid)?;
    let mode = match a.mode {
        QuadMode::Minimal => QuadratureMode::MinimalOdd,
        QuadMode::Pow2 => QuadratureMode::PowerOfTwo,
    };
    let report = average_count_identity(&b, a.lambda, a.mu, mode)?;
    let direct_float = rat_to_f64(&report.direct);
    Ok(output::to_json(&output::SpectralIdentityJson {
        schema_version: SCHEMA_VERSION,
        direct: output::rat_str(&report.direct),
        direct_float,
        quadrature: report.quadrature,
        grid: report.grid,
        error_abs: (report.quadrature - direct_float).abs(),
    }))
}

fn spectral_mass_cmd(a: &SpectralMassArgs) -> Result<String> {
    let b = formats::read_grid_set(&a.grid)?;
    let k = b.dimension();
    let mut region = match a.region {
        RegionKind::Full => BoxRegion::full(k)?,
        RegionKind::Box => {
            let center = formats::parse_rat_list(a.center.as_deref().ok_or_else(|| {
                Error::Parse("--region box needs --center".into())
            })?)?;
            let half = formats::parse_rat_list(a.half.as_deref().ok_or_else(|| {
                Error::Parse("--region box needs --half".into())
            })?)?;
            BoxRegion::explicit(
                k,
                vec![TorusBox {
                    center,
                    half_widths: half,
                }],
            )?
        }
        RegionKind::Family => {
            let q = a
                .family_q
                .ok_or_else(|| Error::Parse("--region family needs --family-q".into()))?;
            let l = formats::parse_rat(a.family_l.as_deref().ok_or_else(|| {
                Error::Parse("--region family needs --family-l".into())
            })?)?;
            BoxRegion::family(k, BigInt::from(q), &l)?
        }
    };
    if let Some(lambda) = a.pull_back {
        region = region.with_pull_back(BigInt::from(lambda));
    }
    let closed = box_region_mass(&b, &region)?;
    let riemann = match a.riemann {
        Some(grid) => Some(riemann_mass(&b, &region, grid)?),
        None => None,
    };
    Ok(output::to_json(&output::SpectralMassJson {
        schema_version: SCHEMA_VERSION,
        closed,
        riemann,
        riemann_grid: a.riemann,
    }))
}

fn dichotomy_cmd(a: &DichotomyArgs) -> Result<String> {
    let b = formats::read_grid_set(&a.set)?;
    let eta = formats::parse_rat(&a.eta)?;
    let eps = formats::parse_rat(&a.eps)?;
    let report = dichotomy_report(&b, &eps, a.lambda, a.mu, &eta)?;
    Ok(output::to_json(&output::DichotomyJson {
        schema_version: SCHEMA_VERSION,
        branch1: output::DichotomyBranchOneJson {
            count: report.branch1.count,
            threshold: output::rat_str(&report.branch1.threshold),
            holds: report.branch1.holds,
        },
        branch2: output::DichotomyBranchTwoJson {
            mass: report.branch2.mass,
            threshold: report.branch2.threshold,
            holds: report.branch2.holds,
        },
    }))
}

fn lift_cmd(a: &LiftArgs) -> Result<String> {
    let set = formats::read_dense_set(&a.set)?;
    let p = formats::parse_poly(&a.poly)?;
    let eps = formats::parse_rat(&a.eps)?;
    let lift = lift_finite(&set, &p, &eps, a.l)?;
    let verified = verify_lift_inclusion(&set, &p, &eps, a.l, &lift)?;
    if let Some(path) = &a.grid_out {
        std::fs::write(path, formats::grid_set_text(&lift.lifted))
            .map_err(|e| Error::Parse(format!("cannot write '{}': {e}", path.display())))?;
    }
    Ok(output::to_json(&output::LiftJson {
        schema_version: SCHEMA_VERSION,
        residue: lift.residue,
        modulus: lift.modulus,
        dimension: lift.lifted.dimension(),
        side: lift.side,
        offset: lift.offset,
        n_prime: lift.n_prime,
        eta: output::rat_str(&lift.eta),
        tile_origin: lift.tile_origin,
        cardinality: lift.lifted.members().len() as u64,
        candidates_tried: lift.candidates_tried,
        verified,
    }))
}

/// `λ_j = period·j + a·L`: the start of the j-th vanishing window.
fn lambda_formula(period: u64, a: u64, l: u64) -> String {
    format!("lambda_j = {period}*j + {}", a as u128 * l as u128)
}

fn counterexample_build_cmd(a: &CounterexampleBuildArgs) -> Result<String> {
    let p = formats::parse_poly(&a.poly)?;
    let desc = counterexample_build(&p, a.l)?;
    Ok(output::to_json(&output::CounterexampleBuildJson {
        schema_version: SCHEMA_VERSION,
        a: desc.a,
        m: desc.m,
        period: desc.period,
        block: [desc.block.0, desc.block.1],
        l: desc.l,
        lambda_formula: lambda_formula(desc.period, desc.a, desc.l),
    }))
}

fn counterexample_verify_cmd(a: &CounterexampleVerifyArgs) -> Result<String> {
    let p = formats::parse_poly(&a.poly)?;
    let desc = counterexample_build(&p, a.l)?;
    let verified = counterexample_verify(&desc, &p, a.l, a.j_max)?;
    Ok(output::to_json(&output::CounterexampleVerifyJson {
        schema_version: SCHEMA_VERSION,
        a: desc.a,
        m: desc.m,
        period: desc.period,
        block: [desc.block.0, desc.block.1],
        l: desc.l,
        j_max: a.j_max,
        verified,
    }))
}

fn khintchine_cmd(a: &KhintchineArgs) -> Result<String> {
    let p = formats::parse_poly(&a.poly)?;
    let eps = formats::parse_rat(&a.eps)?;
    let spec = match (&a.density, &a.structured) {
        (Some(d), None) => GeneratorSpec::Random {
            universe: a.universe,
            density: formats::parse_rat(d)?,
        },
        (None, Some(s)) => GeneratorSpec::Structured {
            universe: a.universe,
            descriptor: s.clone(),
        },
        _ => {
            return Err(Error::Parse(
                "exactly one of --density / --structured selects the set family".into(),
            ))
        }
    };
    let summary = khintchine_experiment(&spec, &p, &eps, a.trials, a.seed)?;
    Ok(output::to_json(&output::KhintchineJson {
        schema_version: SCHEMA_VERSION,
        universe: a.universe,
        range_end: summary.range_end,
        trials: summary
            .trials
            .iter()
            .map(|t| output::KhintchineTrialJson {
                trial: t.trial,
                seed: t.seed,
                cardinality: t.cardinality,
                return_count: t.return_count,
                density: t.density,
                max_gap: t.max_gap,
            })
            .collect(),
        min_density: summary.min_density,
        mean_density: summary.mean_density,
    }))
}
