//! Constructive reductions: lifting a 1-D recurrence problem onto the moment
//! curve in a k-dimensional box, the periodic set with empty recurrence along
//! arbitrarily long shift windows, and deterministic set generators.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::grid::GridSet;
use crate::poly::{curve_point, Polynomial};
use crate::set::{residue_split, DenseSet};
use crate::torus::Rat;
use crate::weyl::binomial;

/// Seeded or structured description of an experiment input set.
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    /// Independent inclusion of each element with exact probability `density`.
    Random {
        /// Universe size `N`.
        universe: u64,
        /// Inclusion probability in `[0, 1]`.
        density: Rat,
    },
    /// A set described by the textual grammar of `gen_structured_set`.
    Structured {
        /// Universe size `N`.
        universe: u64,
        /// Grammar text.
        descriptor: String,
    },
}

impl GeneratorSpec {
    /// Universe size `N` of the sets this spec produces.
    pub fn universe(&self) -> u64 {
        match self {
            GeneratorSpec::Random { universe, .. } => *universe,
            GeneratorSpec::Structured { universe, .. } => *universe,
        }
    }

    /// Produces the set; the seed only matters for the random variant.
    pub fn realize(&self, seed: u64) -> Result<DenseSet> {
        match self {
            GeneratorSpec::Random { universe, density } => {
                gen_random_set(*universe, density, seed)
            }
            GeneratorSpec::Structured {
                universe,
                descriptor,
            } => gen_structured_set(*universe, descriptor),
        }
    }
}

/// Seeded random set: each `v ∈ [1, N]` joins independently with exact
/// probability `δ = a/b`, decided by an unbiased uniform draw below `b`
/// (rejection sampling, no modulo bias). Identical seed, identical set.
pub fn gen_random_set(n: u64, delta: &Rat, seed: u64) -> Result<DenseSet> {
    if delta < &Rat::zero() || delta > &Rat::one() {
        return Err(Error::Contract("density must lie in [0, 1]".into()));
    }
    if delta.is_zero() {
        return Ok(DenseSet::empty(n));
    }
    if delta.is_one() {
        return Ok(DenseSet::full(n));
    }
    let num = delta
        .numer()
        .to_u64()
        .ok_or_else(|| Error::Contract("density numerator exceeds 64 bits".into()))?;
    let den = delta
        .denom()
        .to_u64()
        .ok_or_else(|| Error::Contract("density denominator exceeds 64 bits".into()))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    // Largest multiple of den representable; draws at or above it are
    // rejected so the residue below is exactly uniform.
    let lim = u64::MAX - u64::MAX % den;
    let mut members = Vec::new();
    for v in 1..=n {
        let r = loop {
            let u = rng.next_u64();
            if u < lim {
                break u % den;
            }
        };
        if r < num {
            members.push(v);
        }
    }
    DenseSet::from_members(n, &members)
}

enum SpecAst {
    Ap { q: u64, j: u64 },
    Interval { a: u64, b: u64 },
    Union(Box<SpecAst>, Box<SpecAst>),
}

fn parse_spec(s: &str) -> Result<SpecAst> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("ap:") {
        let (qs, js) = rest
            .split_once('+')
            .ok_or_else(|| Error::Parse(alloc::format!("expected ap:<q>+<j>, got {s:?}")))?;
        let q: u64 = qs
            .trim()
            .parse()
            .map_err(|_| Error::Parse(alloc::format!("bad modulus in {s:?}")))?;
        let j: u64 = js
            .trim()
            .parse()
            .map_err(|_| Error::Parse(alloc::format!("bad residue in {s:?}")))?;
        if q == 0 {
            return Err(Error::Parse("progression modulus must be >= 1".into()));
        }
        return Ok(SpecAst::Ap { q, j: j % q });
    }
    if let Some(rest) = s.strip_prefix("interval:") {
        let (as_, bs) = rest
            .split_once('-')
            .ok_or_else(|| Error::Parse(alloc::format!("expected interval:<a>-<b>, got {s:?}")))?;
        let a: u64 = as_
            .trim()
            .parse()
            .map_err(|_| Error::Parse(alloc::format!("bad interval start in {s:?}")))?;
        let b: u64 = bs
            .trim()
            .parse()
            .map_err(|_| Error::Parse(alloc::format!("bad interval end in {s:?}")))?;
        if a == 0 || a > b {
            return Err(Error::Parse(alloc::format!(
                "interval must satisfy 1 <= a <= b, got {a}-{b}"
            )));
        }
        return Ok(SpecAst::Interval { a, b });
    }
    if let Some(rest) = s.strip_prefix("union(") {
        let inner = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::Parse("unclosed union(...)".into()))?;
        let mut depth = 0usize;
        for (i, c) in inner.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth = depth
                        .checked_sub(1)
                        .ok_or_else(|| Error::Parse("unbalanced parentheses".into()))?
                }
                ',' if depth == 0 => {
                    let left = parse_spec(&inner[..i])?;
                    let right = parse_spec(&inner[i + 1..])?;
                    return Ok(SpecAst::Union(Box::new(left), Box::new(right)));
                }
                _ => {}
            }
        }
        return Err(Error::Parse("union needs two comma-separated parts".into()));
    }
    Err(Error::Parse(alloc::format!(
        "unrecognized set descriptor {s:?}"
    )))
}

fn mark(ast: &SpecAst, flags: &mut [bool]) {
    let n = flags.len() as u64;
    match ast {
        SpecAst::Ap { q, j } => {
            let mut v = if *j == 0 { *q } else { *j };
            while v <= n {
                flags[(v - 1) as usize] = true;
                v += q;
            }
        }
        SpecAst::Interval { a, b } => {
            for v in *a..=(*b).min(n) {
                flags[(v - 1) as usize] = true;
            }
        }
        SpecAst::Union(l, r) => {
            mark(l, flags);
            mark(r, flags);
        }
    }
}

/// Structured set from the grammar
/// `ap:<q>+<j>` | `interval:<a>-<b>` | `union(<spec>,<spec>)`,
/// intersected with `[1, N]`. Progressions hold the `v ≡ j (mod q)` members;
/// intervals clamp to the universe; unions may nest.
pub fn gen_structured_set(n: u64, spec: &str) -> Result<DenseSet> {
    let ast = parse_spec(spec)?;
    let mut flags = alloc::vec![false; n as usize];
    mark(&ast, &mut flags);
    let members: Vec<u64> = flags
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(i, _)| i as u64 + 1)
        .collect();
    DenseSet::from_members(n, &members)
}

/// Search cap for the increasing-threshold scan.
const INCREASING_SCAN_CAP: u64 = 1 << 20;
/// Search cap for the block multiplier `a`.
const MULTIPLIER_CAP: u64 = 1_000_000;

/// Parameters of the periodic set whose recurrence vanishes on every window
/// `[λ_j, λ_j + L]` with `λ_j = period·j + a·L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicSetDescriptor {
    /// The minimal multiplier found by the search.
    pub a: u64,
    /// Block length `M = P(aL)`.
    pub m: u64,
    /// `3M`.
    pub period: u64,
    /// One period holds exactly `[M+1, 2M]`.
    pub block: (u64, u64),
    /// The window length the descriptor was built for.
    pub l: u64,
}

/// Least `m >= 0` such that `P(n+1) > P(n)` for every integer `n >= m`.
fn increasing_threshold(p: &Polynomial) -> Result<u64> {
    let k = p.degree();
    if k == 1 {
        // The difference is the constant leading coefficient, positive here.
        return Ok(0);
    }
    // Difference polynomial coefficients d_i = Σ_{j>i} c_j·C(j,i) for
    // i = 0..k-1; its leading coefficient is k·c_k.
    let coeffs = p.coeffs();
    let mut d: Vec<BigInt> = alloc::vec![BigInt::zero(); k];
    for (i, di) in d.iter_mut().enumerate() {
        for (jm1, &c) in coeffs.iter().enumerate() {
            let j = jm1 + 1;
            if j > i {
                *di += BigInt::from(c) * binomial(j, i);
            }
        }
    }
    let lead = d[k - 1].clone();
    // All real roots of the difference lie below 1 + max|d_i|/lead, so the
    // sign is settled beyond that point.
    let max_abs = d[..k - 1]
        .iter()
        .map(|v| v.abs())
        .max()
        .unwrap_or_else(BigInt::zero);
    let bound: BigInt = (max_abs / &lead) + 2;
    let bound = bound
        .to_u64()
        .filter(|&b| b <= INCREASING_SCAN_CAP)
        .ok_or_else(|| Error::Resource("increasing-threshold scan range too large".into()))?;
    let mut threshold = 0;
    for n in 0..=bound {
        let diff = p.eval_big(&BigInt::from(n + 1)) - p.eval_big(&BigInt::from(n));
        if diff <= BigInt::zero() {
            threshold = n + 1;
        }
    }
    Ok(threshold)
}

/// Builds the periodic counterexample parameters: the least `a >= 1` such
/// that `P` is increasing on `[aL, ∞)`, `2·P(aL) >= P((a+1)L)`, and
/// `P(aL) >= 1` (the block must be nonempty). Requires a positive leading
/// coefficient and `L >= 1`.
pub fn counterexample_build(p: &Polynomial, l: u64) -> Result<PeriodicSetDescriptor> {
    if p.leading() <= 0 {
        return Err(Error::Contract(
            "the leading coefficient must be positive".into(),
        ));
    }
    if l == 0 {
        return Err(Error::Contract("window length must be >= 1".into()));
    }
    let threshold = increasing_threshold(p)?;
    for a in 1..=MULTIPLIER_CAP {
        let al = a
            .checked_mul(l)
            .ok_or(Error::Overflow("multiplier times window length"))?;
        if al < threshold {
            continue;
        }
        let p_al = p.eval_big(&BigInt::from(al));
        if p_al < BigInt::one() {
            continue;
        }
        let p_next = p.eval_big(&BigInt::from(
            a.checked_add(1)
                .and_then(|x| x.checked_mul(l))
                .ok_or(Error::Overflow("multiplier times window length"))?,
        ));
        if BigInt::from(2) * &p_al >= p_next {
            let m = p_al
                .to_u64()
                .ok_or(Error::Overflow("block length exceeds 64 bits"))?;
            let period = m
                .checked_mul(3)
                .ok_or(Error::Overflow("period exceeds 64 bits"))?;
            return Ok(PeriodicSetDescriptor {
                a,
                m,
                period,
                block: (m + 1, 2 * m),
                l,
            });
        }
    }
    Err(Error::NotFound(alloc::format!(
        "no multiplier up to {MULTIPLIER_CAP} satisfies the doubling condition"
    )))
}

/// The j-th window start `λ_j = period·j + a·L`, with `L` the length the
/// descriptor was built for.
pub fn window_start(desc: &PeriodicSetDescriptor, j: u64) -> Result<u64> {
    desc.period
        .checked_mul(j)
        .and_then(|v| v.checked_add(desc.a.checked_mul(desc.l)?))
        .ok_or(Error::Overflow("window start"))
}

fn circular_overlap(block: (u64, u64), shift: u64, period: u64) -> bool {
    if shift == 0 {
        return true;
    }
    for v in block.0..=block.1 {
        let w = (v - 1 + shift) % period + 1;
        if w >= block.0 && w <= block.1 {
            return true;
        }
    }
    false
}

/// Checks `A ∩ (A + P(n)) = ∅` for every `n ∈ [λ_j, λ_j + L]`, `j = 0..=j_max`,
/// where `A` is the periodic set described by `desc` and the window starts
/// `λ_j` come from the descriptor itself. The passed `L` sets the checked
/// window width (widths beyond the build length probe past the guarantee).
/// The intersection is evaluated on one period with wraparound, which agrees
/// exactly with the infinite periodic set.
pub fn counterexample_verify(
    desc: &PeriodicSetDescriptor,
    p: &Polynomial,
    l: u64,
    j_max: u64,
) -> Result<bool> {
    if desc.period == 0 || desc.block.0 < 1 || desc.block.0 > desc.block.1 || desc.block.1 > desc.period
    {
        return Err(Error::Contract("malformed periodic descriptor".into()));
    }
    let period =
        i64::try_from(desc.period).map_err(|_| Error::Overflow("period exceeds i64 range"))?;
    for j in 0..=j_max {
        let start = window_start(desc, j)?;
        for n in start..=start.checked_add(l).ok_or(Error::Overflow("window end"))? {
            let n_i = i64::try_from(n).map_err(|_| Error::Overflow("shift index"))?;
            let s = p.eval_mod(n_i, period)? as u64;
            if circular_overlap(desc.block, s, desc.period) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Materializes `copies` consecutive periods of the described set as a dense
/// set on `[1, period·copies]`.
pub fn materialize_periodic(desc: &PeriodicSetDescriptor, copies: u64) -> Result<DenseSet> {
    let n = desc
        .period
        .checked_mul(copies)
        .ok_or(Error::Overflow("materialized universe"))?;
    let mut members = Vec::new();
    for c in 0..copies {
        let base = c * desc.period;
        for v in desc.block.0..=desc.block.1 {
            members.push(base + v);
        }
    }
    DenseSet::from_members(n, &members)
}

/// Optional overrides for the lift search.
#[derive(Clone, Debug, Default)]
pub struct LiftConfig {
    /// Tile-scale parameter; defaults to `ε/(20k)`.
    pub eta: Option<Rat>,
    /// Index cube half-range; defaults to `(1 + Σ|c_i|)·N`.
    pub n_prime: Option<i64>,
    /// Cap on qualifying `(j, tile)` candidates before a resource error.
    pub max_candidates: Option<u64>,
}

/// Default qualifying-candidate cap for the lift search.
pub const DEFAULT_LIFT_CANDIDATES: u64 = 50_000;

/// A verified lift of a 1-D set onto a k-dimensional tile.
#[derive(Clone, Debug)]
pub struct LiftResult {
    /// Chosen residue class `j` mod `modulus`.
    pub residue: u64,
    /// The gcd `m` of the shift polynomial's coefficients.
    pub modulus: u64,
    /// Tile origin `x` on the `side`-spaced lattice.
    pub tile_origin: Vec<i64>,
    /// The lifted set `B ⊆ [1, side]^k`.
    pub lifted: GridSet,
    /// Tile side length.
    pub side: u64,
    /// Additive bookkeeping constant: a member `y` of `B` maps to the
    /// original element `Σ c_i y_i + offset`.
    pub offset: i64,
    /// Index cube half-range actually used.
    pub n_prime: i64,
    /// Tile-scale parameter actually used.
    pub eta: Rat,
    /// Qualifying candidates examined before this one verified.
    pub candidates_tried: u64,
}

fn linear_form(coeffs: &[i64], point: &[i64]) -> Result<i64> {
    let mut acc: i128 = 0;
    for (c, x) in coeffs.iter().zip(point) {
        acc += i128::from(*c) * i128::from(*x);
    }
    i64::try_from(acc).map_err(|_| Error::Overflow("linear form value"))
}

/// Lift with default configuration; see `lift_finite_with`.
pub fn lift_finite(
    a: &DenseSet,
    p: &Polynomial,
    epsilon: &Rat,
    l: u64,
) -> Result<LiftResult> {
    lift_finite_with(a, p, epsilon, l, &LiftConfig::default())
}

/// Searches residue classes `j` mod `m` (ascending) and tiles `x` on the
/// `side`-spaced lattice (lexicographically ascending, axis 1 most
/// significant) for a nonempty lifted set
/// `B = {y ∈ [1, side]^k : Σ c_i (x_i + y_i) + j ∈ A}`
/// over tiles whose linear-form range stays inside `[1, N]`, returning the
/// first candidate passing `verify_lift_inclusion`. Every member of a
/// returned lift maps back into `A` by construction.
pub fn lift_finite_with(
    a: &DenseSet,
    p: &Polynomial,
    epsilon: &Rat,
    l: u64,
    cfg: &LiftConfig,
) -> Result<LiftResult> {
    if a.cardinality() == 0 {
        return Err(Error::Contract("cannot lift an empty set".into()));
    }
    if epsilon <= &Rat::zero() || epsilon > &Rat::one() {
        return Err(Error::Contract("ε must lie in (0, 1]".into()));
    }
    let n = i64::try_from(a.universe_size())
        .map_err(|_| Error::Overflow("universe size exceeds i64 range"))?;
    let k = p.degree();
    let coeffs = p.coeffs().to_vec();
    let m = p.coeff_gcd();
    let eta = match &cfg.eta {
        Some(e) => e.clone(),
        None => epsilon / Rat::from_integer(BigInt::from(20 * k as i64)),
    };
    if eta <= Rat::zero() {
        return Err(Error::Contract("η must be positive".into()));
    }
    let side_floor = (&eta * Rat::from_integer(BigInt::from(n))
        / Rat::from_integer(BigInt::from(m)))
    .floor()
    .to_integer()
    .to_i64()
    .ok_or(Error::Overflow("tile side"))?;
    let side = side_floor.max(1);
    let n_prime = match cfg.n_prime {
        Some(v) if v >= side => v,
        Some(_) => {
            return Err(Error::Contract(
                "index range must admit at least one tile".into(),
            ))
        }
        None => {
            let sum_abs: i64 = coeffs
                .iter()
                .try_fold(0i64, |acc, &c| acc.checked_add(c.unsigned_abs() as i64))
                .ok_or(Error::Overflow("coefficient sum"))?;
            (1 + sum_abs)
                .checked_mul(n)
                .ok_or(Error::Overflow("index cube half-range"))?
        }
    };
    // Fail fast if the tile itself does not fit in the cell budget.
    GridSet::empty(k, side as u64)?;
    let split = residue_split(a, p);
    // The linear form over a tile spans [P(x)+lo_off, P(x)+hi_off].
    let mut lo_off: i64 = 0;
    let mut hi_off: i64 = 0;
    for &c in &coeffs {
        if c >= 0 {
            lo_off = lo_off.checked_add(c).ok_or(Error::Overflow("corner offset"))?;
            hi_off = hi_off
                .checked_add(c.checked_mul(side).ok_or(Error::Overflow("corner offset"))?)
                .ok_or(Error::Overflow("corner offset"))?;
        } else {
            lo_off = lo_off
                .checked_add(c.checked_mul(side).ok_or(Error::Overflow("corner offset"))?)
                .ok_or(Error::Overflow("corner offset"))?;
            hi_off = hi_off.checked_add(c).ok_or(Error::Overflow("corner offset"))?;
        }
    }
    let t_lo = (-n_prime - 1).div_euclid(side) + i64::from((-n_prime - 1).rem_euclid(side) != 0);
    let t_hi = (n_prime - side).div_euclid(side);
    if t_lo > t_hi {
        return Err(Error::Contract(
            "index range admits no tile at this side length".into(),
        ));
    }
    let max_candidates = cfg.max_candidates.unwrap_or(DEFAULT_LIFT_CANDIDATES);
    let mut candidates: u64 = 0;
    for j in 0..m {
        if split.classes[j as usize].cardinality() == 0 {
            continue;
        }
        // Odometer over tile indices, axis 1 most significant.
        let mut t = alloc::vec![t_lo; k];
        'tiles: loop {
            let x: Vec<i64> = t.iter().map(|&ti| ti * side).collect();
            let px = linear_form(&coeffs, &x)?;
            let fits = px
                .checked_add(lo_off)
                .map_or(false, |lo| lo >= 1)
                && px.checked_add(hi_off).map_or(false, |hi| hi <= n);
            if fits {
                candidates += 1;
                if candidates > max_candidates {
                    return Err(Error::Resource(alloc::format!(
                        "lift search exceeded {max_candidates} qualifying candidates"
                    )));
                }
                let mut members: Vec<Vec<i64>> = Vec::new();
                let mut y = alloc::vec![1i64; k];
                'points: loop {
                    let v = px + linear_form(&coeffs, &y)?;
                    if a.contains(v + j as i64) {
                        members.push(y.clone());
                    }
                    for axis in (0..k).rev() {
                        if y[axis] < side {
                            y[axis] += 1;
                            for later in y.iter_mut().skip(axis + 1) {
                                *later = 1;
                            }
                            continue 'points;
                        }
                    }
                    break;
                }
                if !members.is_empty() {
                    let lifted = GridSet::from_members(k, side as u64, &members)?;
                    let lift = LiftResult {
                        residue: j,
                        modulus: m,
                        tile_origin: x.clone(),
                        lifted,
                        side: side as u64,
                        offset: px
                            .checked_add(j as i64)
                            .ok_or(Error::Overflow("lift offset"))?,
                        n_prime,
                        eta: eta.clone(),
                        candidates_tried: candidates,
                    };
                    if verify_lift_inclusion(a, p, epsilon, l, &lift)? {
                        return Ok(lift);
                    }
                }
            }
            for axis in (0..k).rev() {
                if t[axis] < t_hi {
                    t[axis] += 1;
                    for later in t.iter_mut().skip(axis + 1) {
                        *later = t_lo;
                    }
                    continue 'tiles;
                }
            }
            break;
        }
    }
    Err(Error::NotFound(
        "no residue class and tile yields a verified lift at this scale".into(),
    ))
}

/// Checks the transfer property of a lift: for every `n ∈ [0, L]`, whenever
/// the lifted set clears its `ε/2` threshold along the moment curve, the
/// original set clears its `ε` threshold at shift `P(n)`. All comparisons
/// are exact integer cross-multiplications.
pub fn verify_lift_inclusion(
    a: &DenseSet,
    p: &Polynomial,
    epsilon: &Rat,
    l: u64,
    lift: &LiftResult,
) -> Result<bool> {
    let b = &lift.lifted;
    let k = b.dimension();
    let cells = BigInt::from(b.cells());
    let b_card = BigInt::from(b.cardinality());
    let n_big = BigInt::from(a.universe_size());
    let a_card = BigInt::from(a.cardinality());
    let pn = epsilon.numer();
    let pd = epsilon.denom();
    // Lifted: cnt_B·M^k > |B|^2 - (ε/2)·M^(2k), multiplied through by 2·pd.
    let lift_rhs = BigInt::from(2) * pd * &b_card * &b_card - pn * &cells * &cells;
    // Original: cnt_A·N > |A|^2 - ε·N^2, multiplied through by pd.
    let orig_rhs = pd * &a_card * &a_card - pn * &n_big * &n_big;
    for n in 0..=l {
        let n_i = i64::try_from(n).map_err(|_| Error::Overflow("shift index"))?;
        let gamma = curve_point(k, n_i)?;
        let cnt_b = BigInt::from(b.shift_intersect_count(&gamma)?);
        if BigInt::from(2) * pd * cnt_b * &cells > lift_rhs {
            let cnt_a = BigInt::from(a.shift_intersect_count(p.eval(n_i)?));
            if pd * cnt_a * &n_big <= orig_rhs {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
