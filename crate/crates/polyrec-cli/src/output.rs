//! Output artifacts: versioned JSON schemas, the profile CSV, and the
//! profile SVG plot. Every emitter is deterministic: identical inputs
//! produce identical bytes, so reruns can be diffed.

use polyrec_core::profile::RecurrenceProfile;
use polyrec_core::{Polynomial, Rat, Result};
use serde::{Deserialize, Serialize};

/// Version stamped into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Exact rational rendering: `a/b` in lowest terms, or a bare integer.
pub fn rat_str(r: &Rat) -> String {
    r.to_string()
}

/// Pretty JSON with a trailing newline.
pub fn to_json(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("schema types never fail");
    text.push('\n');
    text
}

#[derive(Serialize, Deserialize, Debug)]
pub struct ProfileJson {
    pub schema_version: u32,
    pub universe_size: u64,
    pub set_cardinality: u64,
    pub range_end: u64,
    pub counts: Vec<u64>,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct ReturnStatsJson {
    pub count: usize,
    pub density: f64,
    pub max_gap: u64,
    pub positive_count: usize,
    pub positive_density: f64,
    pub positive_max_gap: u64,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct ReturnsJson {
    pub schema_version: u32,
    pub epsilon: String,
    pub range_end: u64,
    pub times: Vec<u64>,
    pub stats: ReturnStatsJson,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct WeylEvalJson {
    pub schema_version: u32,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct WeylRelationsJson {
    pub schema_version: u32,
    pub k: usize,
    pub lambda: u64,
    pub mu: u64,
    pub q: u64,
    pub samples: u32,
    pub max_r1: f64,
    pub max_r2: f64,
    pub max_r3: f64,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct WeylScanJson {
    pub schema_version: u32,
    pub max_abs: f64,
    pub argmax: Vec<String>,
    pub kept: u64,
    pub discarded: u64,
    pub ratio: f64,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct TrappedJson {
    pub axis: usize,
    pub lower: String,
    pub upper: String,
    pub distance: String,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct ArcsMemberJson {
    pub schema_version: u32,
    pub in_mfrak: bool,
    pub in_omega: bool,
    pub in_pulled_back: bool,
    pub trapped_axis: Option<TrappedJson>,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct ArcsOverlapJson {
    pub schema_version: u32,
    pub windows: usize,
    pub count: usize,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct SpectralIdentityJson {
    pub schema_version: u32,
    pub direct: String,
    pub direct_float: f64,
    pub quadrature: f64,
    pub grid: Vec<u64>,
    pub error_abs: f64,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct SpectralMassJson {
    pub schema_version: u32,
    pub closed: f64,
    pub riemann: Option<f64>,
    pub riemann_grid: Option<u64>,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct DichotomyBranchOneJson {
    pub count: u64,
    pub threshold: String,
    pub holds: bool,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct DichotomyBranchTwoJson {
    pub mass: f64,
    pub threshold: f64,
    pub holds: bool,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct DichotomyJson {
    pub schema_version: u32,
    pub branch1: DichotomyBranchOneJson,
    pub branch2: DichotomyBranchTwoJson,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct LiftJson {
    pub schema_version: u32,
    pub residue: u64,
    pub modulus: u64,
    pub dimension: usize,
    pub side: u64,
    pub offset: i64,
    pub n_prime: i64,
    pub eta: String,
    pub tile_origin: Vec<i64>,
    pub cardinality: u64,
    pub candidates_tried: u64,
    pub verified: bool,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct CounterexampleBuildJson {
    pub schema_version: u32,
    pub a: u64,
    #[serde(rename = "M")]
    pub m: u64,
    pub period: u64,
    pub block: [u64; 2],
    #[serde(rename = "L")]
    pub l: u64,
    pub lambda_formula: String,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct CounterexampleVerifyJson {
    pub schema_version: u32,
    pub a: u64,
    #[serde(rename = "M")]
    pub m: u64,
    pub period: u64,
    pub block: [u64; 2],
    #[serde(rename = "L")]
    pub l: u64,
    pub j_max: u64,
    pub verified: bool,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct KhintchineTrialJson {
    pub trial: u32,
    pub seed: u64,
    pub cardinality: u64,
    pub return_count: usize,
    pub density: f64,
    pub max_gap: u64,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct KhintchineJson {
    pub schema_version: u32,
    pub universe: u64,
    pub range_end: u64,
    pub trials: Vec<KhintchineTrialJson>,
    pub min_density: f64,
    pub mean_density: f64,
}

/// Normalized recurrence: `count * N / |A|^2`, so 1.0 is the level a
/// density-|A|/N set sustains on average; 0 when the set is empty.
pub fn count_ratio(count: u64, universe: u64, cardinality: u64) -> f64 {
    if cardinality == 0 {
        return 0.0;
    }
    count as f64 * universe as f64 / (cardinality as f64 * cardinality as f64)
}

/// CSV rows `n,Pn,count,ratio` over n in [0, L].
pub fn profile_csv(prof: &RecurrenceProfile, p: &Polynomial) -> Result<String> {
    let mut out = String::from("n,Pn,count,ratio\n");
    for (n, &count) in prof.counts.iter().enumerate() {
        let pn = p.eval(n as i64)?;
        let ratio = count_ratio(count, prof.universe_size, prof.set_cardinality);
        out.push_str(&format!("{n},{pn},{count},{ratio}\n"));
    }
    Ok(out)
}

/// A fixed-size plot of the profile curve; a write-only convenience with
/// no styling knobs so reruns stay byte-identical.
pub fn profile_svg(prof: &RecurrenceProfile) -> String {
    const W: f64 = 800.0;
    const H: f64 = 480.0;
    const MARGIN: f64 = 48.0;
    let l = prof.counts.len().saturating_sub(1) as f64;
    let peak = prof.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let x = |n: f64| MARGIN + if l == 0.0 { 0.0 } else { (W - 2.0 * MARGIN) * n / l };
    let y = |c: f64| H - MARGIN - (H - 2.0 * MARGIN) * c / peak;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN,
        t = MARGIN,
    ));
    if prof.counts.len() == 1 {
        svg.push_str(&format!(
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"3\" fill=\"steelblue\"/>\n",
            x(0.0),
            y(prof.counts[0] as f64)
        ));
    } else {
        let points: Vec<String> = prof
            .counts
            .iter()
            .enumerate()
            .map(|(n, &c)| format!("{:.3},{:.3}", x(n as f64), y(c as f64)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n",
            points.join(" ")
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{m}\" y=\"{ty}\" font-family=\"monospace\" font-size=\"12\">\
         shift count over [0, {l}], peak {peak}, |A| = {card}, N = {n}</text>\n</svg>\n",
        m = MARGIN,
        ty = MARGIN - 12.0,
        l = prof.counts.len().saturating_sub(1),
        peak = prof.counts.iter().copied().max().unwrap_or(0),
        card = prof.set_cardinality,
        n = prof.universe_size,
    ));
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip<T: Serialize + for<'a> Deserialize<'a>>(value: &T) -> T {
        serde_json::from_str(&to_json(value)).expect("schema round-trips")
    }

    #[test]
    fn counterexample_schema_uses_display_names() {
        let build = CounterexampleBuildJson {
            schema_version: SCHEMA_VERSION,
            a: 3,
            m: 36,
            period: 108,
            block: [37, 72],
            l: 2,
            lambda_formula: "lambda_j = 108*j + 6".into(),
        };
        let text = to_json(&build);
        assert!(text.contains("\"M\": 36"));
        assert!(text.contains("\"L\": 2"));
        let back = roundtrip(&build);
        assert_eq!(back.m, 36);
        assert_eq!(back.block, [37, 72]);
    }

    #[test]
    fn report_schemas_roundtrip() {
        let returns = ReturnsJson {
            schema_version: SCHEMA_VERSION,
            epsilon: "1/4".into(),
            range_end: 8,
            times: vec![0, 2, 5],
            stats: ReturnStatsJson {
                count: 3,
                density: 1.0 / 3.0,
                max_gap: 3,
                positive_count: 2,
                positive_density: 0.25,
                positive_max_gap: 3,
            },
        };
        assert_eq!(roundtrip(&returns).times, vec![0, 2, 5]);
        let verdict = ArcsMemberJson {
            schema_version: SCHEMA_VERSION,
            in_mfrak: true,
            in_omega: false,
            in_pulled_back: false,
            trapped_axis: Some(TrappedJson {
                axis: 1,
                lower: "1/8".into(),
                upper: "3/2".into(),
                distance: "1/4".into(),
            }),
        };
        assert_eq!(roundtrip(&verdict).trapped_axis.unwrap().axis, 1);
        let dichotomy = DichotomyJson {
            schema_version: SCHEMA_VERSION,
            branch1: DichotomyBranchOneJson {
                count: 4,
                threshold: "9/2".into(),
                holds: false,
            },
            branch2: DichotomyBranchTwoJson {
                mass: 12.5,
                threshold: 0.32,
                holds: true,
            },
        };
        assert!(roundtrip(&dichotomy).branch2.holds);
    }

    #[test]
    fn ratio_normalization() {
        assert_eq!(count_ratio(5, 10, 5), 2.0);
        assert_eq!(count_ratio(7, 64, 0), 0.0);
    }
}
