//! Hyperparameter tuning by local grid search.
//!
//! A method's tunable parameters span a finite lattice. Scalar parameters
//! move on a linear (`a - s, a, a + s`) or exponential (`a/s, a, a·s`) grid
//! clipped to bounds; categorical parameters enumerate a fixed option list.
//! The search first evaluates the full Cartesian product of the initial
//! sets, then repeatedly evaluates the neighborhood of the incumbent best
//! configuration until no unevaluated neighbor remains or the evaluation
//! budget is spent. Scores are mean forecast errors in `[0, 1]`; smaller is
//! better, and an evaluator failure counts as the worst score (1) so the
//! search can route around broken regions of the lattice.
//!
//! Determinism: grids are generated and scored in a canonical order
//! (domains in declaration order, candidate values ascending, later domains
//! varying fastest), configurations are memoized by their canonical JSON
//! serialization so nothing is evaluated twice, and score ties are broken
//! in favor of the earliest evaluation. The configurations inside one
//! round's grid are independent and could be evaluated concurrently without
//! changing the result — rounds are a barrier, and the trace keeps the
//! canonical grid order either way. This implementation evaluates
//! sequentially and leaves parallelism to the evaluator (e.g. across
//! repetitions of the underlying benchmark problem).
//!
//! Scalar lattices are represented by integer offsets from an anchor (the
//! smallest initial value) rather than by repeated multiplication, so a
//! lattice point reached along different search paths is bit-identical and
//! the memoization key is exact. The values listed in an initial set are
//! reproduced literally.

use crate::forecasters::{MethodConfig, MethodName, ParamValue};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Default cap on evaluator calls for one search.
pub const DEFAULT_MAX_EVALS: usize = 500;

/// How far a value may sit from an integer lattice offset (in step units)
/// and still count as on-lattice. Generously above floating-point error,
/// far below half a step.
const LATTICE_SNAP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("parameter `{0}`: the initial set must not be empty")]
    EmptyInitialSet(String),
    #[error("parameter `{param}`: {message}")]
    BadDomain { param: String, message: String },
    #[error("parameter `{param}`: initial value {value} is outside the bounds [{lo}, {hi}]")]
    OutOfBounds {
        param: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error(
        "parameter `{param}`: initial value {value} is not reachable from {anchor} with step {step}"
    )]
    OffLattice {
        param: String,
        value: f64,
        anchor: f64,
        step: f64,
    },
    #[error("the search ended without evaluating any configuration")]
    NothingEvaluated,
}

/// How a scalar parameter steps between neighboring lattice points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    /// Neighbors of `a` are `a - s` and `a + s`.
    Linear,
    /// Neighbors of `a` are `a / s` and `a · s`; requires positive values
    /// and a factor above 1.
    Exponential,
}

/// What happens to a categorical parameter after the first round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CategoricalPolicy {
    /// Every option re-enters every round's grid.
    Persistent,
    /// Only the incumbent best option stays after round 0.
    Yielding,
}

/// A point of a scalar lattice: an integer offset from the anchor, plus an
/// optional adjoined zero (see [`ParamDomain::exponential`]).
///
/// The derived order puts `Zero` first, which is ascending-by-value because
/// adjoined zeros exist only on exponential lattices, where every regular
/// point is positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum LatticePoint {
    Zero,
    Index(i64),
}

#[derive(Debug, Clone)]
struct ScalarLattice {
    scale: Scale,
    step: f64,
    /// Smallest (nonzero) initial value; lattice offsets count from here.
    anchor: f64,
    /// The bounds as requested, for display.
    bounds: (f64, f64),
    /// Smallest and largest in-bounds lattice offsets.
    lo_idx: i64,
    hi_idx: i64,
    /// Initial points, ascending and deduplicated.
    initial: Vec<LatticePoint>,
    /// Exact values for the offsets that appeared in the initial set, so
    /// the grid reproduces them literally instead of via `anchor · s^i`.
    literals: BTreeMap<i64, f64>,
    /// Exponential lattices may adjoin 0 as a rest point outside the
    /// multiplicative grid; its only lattice neighbor is the lowest
    /// in-bounds point, and symmetrically.
    zero_adjoined: bool,
}

impl ScalarLattice {
    /// Offset of `value` in step units (fractional if off-lattice).
    fn offset_of(&self, value: f64) -> f64 {
        match self.scale {
            Scale::Linear => (value - self.anchor) / self.step,
            Scale::Exponential => (value / self.anchor).ln() / self.step.ln(),
        }
    }

    fn value(&self, point: LatticePoint) -> f64 {
        match point {
            LatticePoint::Zero => 0.0,
            LatticePoint::Index(i) => self.literals.get(&i).copied().unwrap_or_else(|| {
                match self.scale {
                    Scale::Linear => self.anchor + i as f64 * self.step,
                    Scale::Exponential => self.anchor * self.step.powi(i as i32),
                }
            }),
        }
    }

    /// The candidate set around `point`: the point itself and its lattice
    /// neighbors, clipped to bounds, ascending.
    fn neighbors(&self, point: LatticePoint) -> Vec<LatticePoint> {
        match point {
            LatticePoint::Zero => vec![LatticePoint::Zero, LatticePoint::Index(self.lo_idx)],
            LatticePoint::Index(i) => {
                let mut out = Vec::with_capacity(4);
                if self.zero_adjoined && i == self.lo_idx {
                    out.push(LatticePoint::Zero);
                }
                if i > self.lo_idx {
                    out.push(LatticePoint::Index(i - 1));
                }
                out.push(LatticePoint::Index(i));
                if i < self.hi_idx {
                    out.push(LatticePoint::Index(i + 1));
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone)]
enum DomainKind {
    Categorical {
        options: Vec<ParamValue>,
        policy: CategoricalPolicy,
    },
    Scalar(ScalarLattice),
}

/// One tunable parameter: a name plus the lattice or option list its values
/// come from. Construct via [`ParamDomain::linear`],
/// [`ParamDomain::exponential`], or [`ParamDomain::categorical`]; all
/// constructors validate, so a constructed domain is always searchable.
#[derive(Debug, Clone)]
pub struct ParamDomain {
    name: String,
    kind: DomainKind,
}

impl ParamDomain {
    /// A categorical parameter over a fixed option list. The whole list is
    /// the initial set.
    pub fn categorical(
        name: &str,
        options: Vec<ParamValue>,
        policy: CategoricalPolicy,
    ) -> Result<Self, TuneError> {
        if options.is_empty() {
            return Err(TuneError::EmptyInitialSet(name.to_string()));
        }
        Ok(Self {
            name: name.to_string(),
            kind: DomainKind::Categorical { options, policy },
        })
    }

    /// A scalar parameter on the additive lattice `anchor + i·step`.
    pub fn linear(
        name: &str,
        step: f64,
        bounds: (f64, f64),
        initial: &[f64],
    ) -> Result<Self, TuneError> {
        Self::scalar(name, Scale::Linear, step, bounds, initial)
    }

    /// A scalar parameter on the multiplicative lattice `anchor · factor^i`.
    ///
    /// Requires `bounds.0 > 0` and `factor > 1`. As a special case the
    /// initial set may contain `0`: zero has no multiplicative neighbors,
    /// so it is adjoined to the lattice as a rest point whose only neighbor
    /// is the lowest in-bounds point (and symmetrically, the lowest point
    /// gains 0 as a downward neighbor). This models integer parameters like
    /// a forward skip whose natural grid is `{0, 1, 2, 4, ..}`.
    pub fn exponential(
        name: &str,
        factor: f64,
        bounds: (f64, f64),
        initial: &[f64],
    ) -> Result<Self, TuneError> {
        Self::scalar(name, Scale::Exponential, factor, bounds, initial)
    }

    fn scalar(
        name: &str,
        scale: Scale,
        step: f64,
        bounds: (f64, f64),
        initial: &[f64],
    ) -> Result<Self, TuneError> {
        let bad = |message: &str| TuneError::BadDomain {
            param: name.to_string(),
            message: message.to_string(),
        };
        if initial.is_empty() {
            return Err(TuneError::EmptyInitialSet(name.to_string()));
        }
        let (lo, hi) = bounds;
        if !(lo.is_finite() && hi.is_finite() && step.is_finite())
            || initial.iter().any(|v| !v.is_finite())
        {
            return Err(bad("bounds, step, and initial values must be finite"));
        }
        if lo > hi {
            return Err(bad("bounds must satisfy lo <= hi"));
        }
        match scale {
            Scale::Linear => {
                if step <= 0.0 {
                    return Err(bad("a linear scale needs step > 0"));
                }
            }
            Scale::Exponential => {
                if step <= 1.0 {
                    return Err(bad("an exponential scale needs a factor > 1"));
                }
                if lo <= 0.0 {
                    return Err(bad("an exponential scale needs a positive lower bound"));
                }
            }
        }

        let mut zero_adjoined = false;
        let mut values: Vec<f64> = Vec::new();
        for &v in initial {
            if scale == Scale::Exponential && v == 0.0 {
                zero_adjoined = true;
            } else if scale == Scale::Exponential && v < 0.0 {
                return Err(bad(
                    "exponential values must be positive (only 0 may be adjoined)",
                ));
            } else {
                values.push(v);
            }
        }
        if values.is_empty() {
            return Err(bad("the initial set needs at least one nonzero value"));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        let anchor = values[0];

        let mut lattice = ScalarLattice {
            scale,
            step,
            anchor,
            bounds,
            lo_idx: 0,
            hi_idx: 0,
            initial: Vec::new(),
            literals: BTreeMap::new(),
            zero_adjoined,
        };

        // Bounds that sit on the lattice snap to their exact offset; bounds
        // that fall between points clip inward.
        let snap_in = |x: f64, inward_up: bool| -> i64 {
            let rounded = x.round();
            if (x - rounded).abs() <= LATTICE_SNAP {
                rounded as i64
            } else if inward_up {
                x.ceil() as i64
            } else {
                x.floor() as i64
            }
        };
        lattice.lo_idx = snap_in(lattice.offset_of(lo), true);
        lattice.hi_idx = snap_in(lattice.offset_of(hi), false);
        if lattice.lo_idx > lattice.hi_idx {
            return Err(bad("the bounds exclude every lattice point"));
        }
        if !lattice.value(LatticePoint::Index(lattice.lo_idx)).is_finite()
            || !lattice.value(LatticePoint::Index(lattice.hi_idx)).is_finite()
        {
            return Err(bad("the lattice overflows the floating-point range"));
        }

        for &v in &values {
            if v < lo || v > hi {
                return Err(TuneError::OutOfBounds {
                    param: name.to_string(),
                    value: v,
                    lo,
                    hi,
                });
            }
            let x = lattice.offset_of(v);
            let rounded = x.round();
            if (x - rounded).abs() > LATTICE_SNAP {
                return Err(TuneError::OffLattice {
                    param: name.to_string(),
                    value: v,
                    anchor,
                    step,
                });
            }
            let idx = rounded as i64;
            lattice.literals.insert(idx, v);
            lattice.initial.push(LatticePoint::Index(idx));
        }
        if zero_adjoined {
            lattice.initial.insert(0, LatticePoint::Zero);
        }

        Ok(Self {
            name: name.to_string(),
            kind: DomainKind::Scalar(lattice),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `Some` for categorical domains.
    pub fn options(&self) -> Option<(&[ParamValue], CategoricalPolicy)> {
        match &self.kind {
            DomainKind::Categorical { options, policy } => Some((options, *policy)),
            DomainKind::Scalar(_) => None,
        }
    }

    /// `Some` for scalar domains.
    pub fn scale(&self) -> Option<Scale> {
        match &self.kind {
            DomainKind::Scalar(lattice) => Some(lattice.scale),
            DomainKind::Categorical { .. } => None,
        }
    }

    /// Step (linear) or factor (exponential) for scalar domains.
    pub fn step(&self) -> Option<f64> {
        match &self.kind {
            DomainKind::Scalar(lattice) => Some(lattice.step),
            DomainKind::Categorical { .. } => None,
        }
    }

    /// The requested bounds for scalar domains.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match &self.kind {
            DomainKind::Scalar(lattice) => Some(lattice.bounds),
            DomainKind::Categorical { .. } => None,
        }
    }

    /// The initial set, ascending for scalars, in listed order for
    /// categorical domains.
    pub fn initial_values(&self) -> Vec<ParamValue> {
        match &self.kind {
            DomainKind::Categorical { options, .. } => options.clone(),
            DomainKind::Scalar(lattice) => lattice
                .initial
                .iter()
                .map(|&p| ParamValue::Number(lattice.value(p)))
                .collect(),
        }
    }
}

/// One coordinate of a grid point, parallel to the domain list.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Coord {
    Option(usize),
    Point(LatticePoint),
}

#[derive(Debug, Clone)]
struct Incumbent {
    coords: Vec<Coord>,
    config: MethodConfig,
    score: f64,
}

/// The progress of one search: everything evaluated so far (keyed by the
/// configuration's canonical serialization), the incumbent best, and the
/// number of completed grid rounds.
#[derive(Debug, Clone)]
pub struct TuneState {
    method: String,
    evaluated: BTreeMap<String, f64>,
    best: Option<Incumbent>,
    step: usize,
}

impl TuneState {
    /// A fresh state; [`next_grid`] on it yields the initial grid (the
    /// Cartesian product of the initial sets).
    pub fn new(method: &str) -> Self {
        Self {
            method: method.to_string(),
            evaluated: BTreeMap::new(),
            best: None,
            step: 0,
        }
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    /// Scores by canonical configuration serialization.
    pub fn evaluated(&self) -> &BTreeMap<String, f64> {
        &self.evaluated
    }

    /// The incumbent best: minimal score, earliest evaluation on ties.
    pub fn best(&self) -> Option<(&MethodConfig, f64)> {
        self.best.as_ref().map(|b| (&b.config, b.score))
    }

    /// Completed grid rounds.
    pub fn step(&self) -> usize {
        self.step
    }

    fn record(&mut self, coords: Vec<Coord>, config: MethodConfig, score: f64) {
        let fresh = self.evaluated.insert(config.canonical(), score).is_none();
        debug_assert!(fresh, "a configuration was evaluated twice");
        let improves = self.best.as_ref().is_none_or(|b| score < b.score);
        if improves {
            self.best = Some(Incumbent {
                coords,
                config,
                score,
            });
        }
    }
}

fn config_for(method: &str, domains: &[ParamDomain], coords: &[Coord]) -> MethodConfig {
    let mut config = MethodConfig::new(method);
    for (domain, coord) in domains.iter().zip(coords) {
        let value = match (&domain.kind, coord) {
            (DomainKind::Categorical { options, .. }, Coord::Option(i)) => options[*i].clone(),
            (DomainKind::Scalar(lattice), Coord::Point(p)) => {
                ParamValue::Number(lattice.value(*p))
            }
            _ => unreachable!("coordinate kinds follow their domains"),
        };
        config.params.insert(domain.name.clone(), value);
    }
    config
}

/// Per-domain candidate lists for the upcoming round: initial sets on a
/// fresh state, neighborhoods of the incumbent afterwards.
fn candidate_axes(state: &TuneState, domains: &[ParamDomain]) -> Vec<Vec<Coord>> {
    domains
        .iter()
        .enumerate()
        .map(|(j, domain)| match &domain.kind {
            DomainKind::Categorical { options, policy } => match (&state.best, policy) {
                (Some(best), CategoricalPolicy::Yielding) => vec![best.coords[j]],
                _ => (0..options.len()).map(Coord::Option).collect(),
            },
            DomainKind::Scalar(lattice) => match &state.best {
                Some(best) => {
                    let Coord::Point(point) = best.coords[j] else {
                        unreachable!("coordinate kinds follow their domains")
                    };
                    lattice.neighbors(point).into_iter().map(Coord::Point).collect()
                }
                None => lattice.initial.iter().copied().map(Coord::Point).collect(),
            },
        })
        .collect()
}

/// Cartesian product in canonical order: first domain outermost, later
/// domains varying fastest. Zero domains yield one empty assignment.
fn cartesian(axes: &[Vec<Coord>]) -> Vec<Vec<Coord>> {
    let mut grid: Vec<Vec<Coord>> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(grid.len() * axis.len());
        for partial in &grid {
            for &coord in axis {
                let mut row = partial.clone();
                row.push(coord);
                next.push(row);
            }
        }
        grid = next;
    }
    grid
}

fn fresh_grid(state: &TuneState, domains: &[ParamDomain]) -> Vec<(Vec<Coord>, MethodConfig)> {
    cartesian(&candidate_axes(state, domains))
        .into_iter()
        .filter_map(|coords| {
            let config = config_for(&state.method, domains, &coords);
            (!state.evaluated.contains_key(&config.canonical())).then_some((coords, config))
        })
        .collect()
}

/// The next round's grid in canonical order, with already-evaluated
/// configurations removed. Empty means the search has converged.
pub fn next_grid(state: &TuneState, domains: &[ParamDomain]) -> Vec<MethodConfig> {
    fresh_grid(state, domains)
        .into_iter()
        .map(|(_, config)| config)
        .collect()
}

/// One scored configuration, in evaluation order. Serializes as a JSON
/// object `{config, mean_cme, step}` suitable for a JSON-lines trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub config: MethodConfig,
    pub mean_cme: f64,
    pub step: usize,
}

/// The result of a search: the best configuration, its score, and the full
/// evaluation trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub best: MethodConfig,
    pub best_score: f64,
    pub trace: Vec<TraceRecord>,
}

/// Errors an evaluator may surface; each one scores as 1 (the worst mean
/// forecast error) and the search continues.
pub type EvalError = Box<dyn std::error::Error + Send + Sync + 'static>;

/// Local grid search over `domains`, scoring configurations with
/// `evaluator` (the mean validation forecast error; must be deterministic
/// for a fixed configuration). At most `max_evals` evaluator calls are made
/// ([`DEFAULT_MAX_EVALS`] is the conventional budget); the budget may cut a
/// round short. Evaluator failures and non-finite scores are recorded as 1.
///
/// With no domains, the method's bare configuration is evaluated once.
pub fn local_grid_search<F>(
    method: &str,
    domains: &[ParamDomain],
    max_evals: usize,
    mut evaluator: F,
) -> Result<TuneOutcome, TuneError>
where
    F: FnMut(&MethodConfig) -> Result<f64, EvalError>,
{
    let mut state = TuneState::new(method);
    let mut trace: Vec<TraceRecord> = Vec::new();
    'search: loop {
        let grid = fresh_grid(&state, domains);
        if grid.is_empty() {
            break;
        }
        for (coords, config) in grid {
            if trace.len() == max_evals {
                break 'search;
            }
            let score = match evaluator(&config) {
                Ok(x) if x.is_finite() => x,
                _ => 1.0,
            };
            trace.push(TraceRecord {
                config: config.clone(),
                mean_cme: score,
                step: state.step,
            });
            state.record(coords, config, score);
        }
        state.step += 1;
    }
    match state.best {
        Some(best) => Ok(TuneOutcome {
            best: best.config,
            best_score: best.score,
            trace,
        }),
        None => Err(TuneError::NothingEvaluated),
    }
}

/// The default tuning domains for every built-in method. Methods with
/// fixed hyperparameters get an empty list (their bare configuration is
/// still evaluated once by [`local_grid_search`]).
pub fn default_grid(method: MethodName) -> Vec<ParamDomain> {
    use MethodName::*;

    fn numbers(values: &[f64]) -> Vec<ParamValue> {
        values.iter().map(|&v| ParamValue::Number(v)).collect()
    }
    let valid = "the built-in domain table is valid";
    let penalty = |name: &str| {
        ParamDomain::exponential(name, 10.0, (1e-15, 1e2), &[1e-12, 1e-8, 1e-4]).expect(valid)
    };
    let bandwidth =
        || ParamDomain::exponential("h", 2.0, (1e-4, 10.0), &[0.05, 0.2, 0.8]).expect(valid);

    match method {
        ConstM | ConstL | LinPo4 | LinPo6 | LinPo4T | LinPo6T | PwNn | SpNn | SpPo2 | SpPo4 => {
            Vec::new()
        }
        Analog => vec![ParamDomain::categorical(
            "omega",
            numbers(&[1.0, 10.0, 100.0]),
            CategoricalPolicy::Persistent,
        )
        .expect(valid)],
        LinS | LinD | LinST | LinDT => vec![
            ParamDomain::linear("K", 1.0, (0.0, 32.0), &[0.0, 1.0, 4.0]).expect(valid),
            ParamDomain::linear("s", 1.0, (1.0, 9.0), &[1.0, 2.0]).expect(valid),
            ParamDomain::linear("degree", 1.0, (1.0, 8.0), &[1.0, 4.0]).expect(valid),
            penalty("lambda"),
        ],
        RaFeS | RaFeD | RaFeST | RaFeDT | EsnS | EsnD | EsnST | EsnDT => vec![
            ParamDomain::exponential("c", 2.0, (1e-7, 1e2), &[0.025, 0.1, 0.4]).expect(valid),
            penalty("lambda"),
            ParamDomain::exponential("psi", 2.0, (1.0, 64.0), &[0.0, 1.0]).expect(valid),
            ParamDomain::categorical(
                "r",
                numbers(&[1.0, 2.0, 3.0, 4.0]),
                CategoricalPolicy::Persistent,
            )
            .expect(valid),
        ],
        PgGpS | PgGpD | PgGpST | PgGpDT | SpGp => vec![bandwidth(), penalty("lambda")],
        GpGp => vec![bandwidth(), penalty("lambda"), penalty("mu")],
        PgLlS | PgLlD | PgLlST | PgLlDT | LlNn => vec![bandwidth()],
        SpPo => vec![
            ParamDomain::linear("degree", 1.0, (1.0, 8.0), &[2.0, 3.0, 4.0]).expect(valid),
            penalty("lambda"),
        ],
        SINDy | SINDyN => {
            vec![ParamDomain::exponential("tau", 2.0, (1e-7, 1e2), &[0.04, 0.16, 0.64])
                .expect(valid)]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecasters::fit;
    use crate::series::{State, TimeSeries};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::collections::HashSet;
    use std::hash::{DefaultHasher, Hash, Hasher};

    fn number(config: &MethodConfig, name: &str) -> f64 {
        match config.params.get(name) {
            Some(ParamValue::Number(x)) => *x,
            other => panic!("expected numeric `{name}`, got {other:?}"),
        }
    }

    fn lattice(domain: &ParamDomain) -> &ScalarLattice {
        match &domain.kind {
            DomainKind::Scalar(lattice) => lattice,
            DomainKind::Categorical { .. } => panic!("expected a scalar domain"),
        }
    }

    fn values(lattice: &ScalarLattice, points: &[LatticePoint]) -> Vec<f64> {
        points.iter().map(|&p| lattice.value(p)).collect()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn invalid_domains_are_rejected() {
        let empty: &[f64] = &[];
        assert!(matches!(
            ParamDomain::linear("K", 1.0, (0.0, 32.0), empty),
            Err(TuneError::EmptyInitialSet(_))
        ));
        assert!(matches!(
            ParamDomain::categorical("r", Vec::new(), CategoricalPolicy::Persistent),
            Err(TuneError::EmptyInitialSet(_))
        ));
        assert!(matches!(
            ParamDomain::linear("K", 1.0, (0.0, 32.0), &[40.0]),
            Err(TuneError::OutOfBounds { value, .. }) if value == 40.0
        ));
        // exponential scales need positive bounds and a factor above 1
        assert!(matches!(
            ParamDomain::exponential("lambda", 10.0, (0.0, 1e2), &[1e-4]),
            Err(TuneError::BadDomain { .. })
        ));
        assert!(matches!(
            ParamDomain::exponential("lambda", 1.0, (1e-15, 1e2), &[1e-4]),
            Err(TuneError::BadDomain { .. })
        ));
        assert!(matches!(
            ParamDomain::linear("K", 0.0, (0.0, 32.0), &[1.0]),
            Err(TuneError::BadDomain { .. })
        ));
        // 0.3 is not a power of 2 away from 0.025
        assert!(matches!(
            ParamDomain::exponential("c", 2.0, (1e-7, 1e2), &[0.025, 0.3]),
            Err(TuneError::OffLattice { value, .. }) if value == 0.3
        ));
        // negative values cannot sit on a multiplicative lattice
        assert!(matches!(
            ParamDomain::exponential("c", 2.0, (1e-7, 1e2), &[-0.1]),
            Err(TuneError::BadDomain { .. })
        ));
        // the adjoined zero alone gives no anchor
        assert!(matches!(
            ParamDomain::exponential("psi", 2.0, (1.0, 64.0), &[0.0]),
            Err(TuneError::BadDomain { .. })
        ));
        // bounds [2, 5] contain no power of 10
        assert!(matches!(
            ParamDomain::exponential("lambda", 10.0, (2.0, 5.0), &[1.0]),
            Err(TuneError::BadDomain { .. })
        ));
    }

    #[test]
    fn exponential_neighbors_match_the_step_factor() {
        let domain =
            ParamDomain::exponential("lambda", 10.0, (1e-15, 1e2), &[1e-12, 1e-8, 1e-4]).unwrap();
        let lat = lattice(&domain);
        // 1e-8 sits four factors of 10 above the anchor 1e-12
        let got = values(lat, &lat.neighbors(LatticePoint::Index(4)));
        assert_eq!(got.len(), 3);
        assert!(close(got[0], 1e-9), "{got:?}");
        assert!(close(got[1], 1e-8), "{got:?}");
        assert!(close(got[2], 1e-7), "{got:?}");
        // the bounds snap to lattice offsets: 1e-15 is 10^-3 below the anchor
        assert_eq!((lat.lo_idx, lat.hi_idx), (-3, 14));
        let low = values(lat, &lat.neighbors(LatticePoint::Index(-3)));
        assert_eq!(low.len(), 2);
        assert!(close(low[0], 1e-15) && close(low[1], 1e-14), "{low:?}");
    }

    #[test]
    fn linear_neighbors_clip_at_the_bounds() {
        let domain = ParamDomain::linear("K", 1.0, (0.0, 32.0), &[0.0, 1.0, 4.0]).unwrap();
        let lat = lattice(&domain);
        assert_eq!(values(lat, &lat.neighbors(LatticePoint::Index(0))), [0.0, 1.0]);
        assert_eq!(
            values(lat, &lat.neighbors(LatticePoint::Index(32))),
            [31.0, 32.0]
        );
        assert_eq!(
            values(lat, &lat.neighbors(LatticePoint::Index(7))),
            [6.0, 7.0, 8.0]
        );
    }

    #[test]
    fn bounds_between_lattice_points_clip_inward() {
        // powers of 2 from 0.05: the bounds 1e-4 and 10 are off-lattice, so
        // the extreme points are 0.05 / 2^8 and 0.05 * 2^7
        let domain = ParamDomain::exponential("h", 2.0, (1e-4, 10.0), &[0.05, 0.2, 0.8]).unwrap();
        let lat = lattice(&domain);
        assert_eq!((lat.lo_idx, lat.hi_idx), (-8, 7));
        assert_eq!(lat.value(LatticePoint::Index(-8)), 0.05 / 256.0);
        assert_eq!(lat.value(LatticePoint::Index(7)), 6.4);
    }

    #[test]
    fn adjoined_zero_borders_the_lowest_lattice_point() {
        let domain = ParamDomain::exponential("psi", 2.0, (1.0, 64.0), &[0.0, 1.0]).unwrap();
        let lat = lattice(&domain);
        assert!(lat.zero_adjoined);
        assert_eq!(values(lat, &lat.initial), [0.0, 1.0]);
        assert_eq!(values(lat, &lat.neighbors(LatticePoint::Zero)), [0.0, 1.0]);
        assert_eq!(
            values(lat, &lat.neighbors(LatticePoint::Index(0))),
            [0.0, 1.0, 2.0]
        );
        assert_eq!(
            values(lat, &lat.neighbors(LatticePoint::Index(6))),
            [32.0, 64.0]
        );
    }

    #[test]
    fn initial_grid_is_the_cartesian_product_in_canonical_order() {
        let domains = default_grid(MethodName::LinD);
        let grid = next_grid(&TuneState::new("LinD"), &domains);
        assert_eq!(grid.len(), 36, "3 * 2 * 2 * 3 initial combinations");

        // later domains vary fastest; initial values are reproduced literally
        let first = &grid[0];
        assert_eq!(number(first, "K"), 0.0);
        assert_eq!(number(first, "s"), 1.0);
        assert_eq!(number(first, "degree"), 1.0);
        assert_eq!(number(first, "lambda"), 1e-12);
        assert_eq!(number(&grid[1], "lambda"), 1e-8);
        assert_eq!(number(&grid[2], "lambda"), 1e-4);
        assert_eq!(number(&grid[3], "degree"), 4.0);
        let last = &grid[35];
        assert_eq!(number(last, "K"), 4.0);
        assert_eq!(number(last, "s"), 2.0);
        assert_eq!(number(last, "degree"), 4.0);
        assert_eq!(number(last, "lambda"), 1e-4);

        let sizes = [
            (MethodName::RaFeD, 3 * 3 * 2 * 4),
            (MethodName::EsnST, 3 * 3 * 2 * 4),
            (MethodName::GpGp, 3 * 3 * 3),
            (MethodName::SpPo, 3 * 3),
            (MethodName::SINDy, 3),
            (MethodName::Analog, 3),
            (MethodName::PwNn, 1),
        ];
        for (method, expect) in sizes {
            let domains = default_grid(method);
            let grid = next_grid(&TuneState::new(method.as_str()), &domains);
            assert_eq!(grid.len(), expect, "{method}");
        }
    }

    #[test]
    fn default_domains_match_the_method_families() {
        for &method in MethodName::ALL {
            let domains = default_grid(method);
            assert_eq!(
                domains.is_empty(),
                method.is_tuning_free(),
                "{method}: empty domains and a tuning-free catalog entry must agree"
            );
        }

        let sppo = default_grid(MethodName::SpPo);
        assert_eq!(sppo.len(), 2);
        assert_eq!(sppo[0].name(), "degree");
        assert_eq!(sppo[0].scale(), Some(Scale::Linear));
        assert_eq!(sppo[0].step(), Some(1.0));
        assert_eq!(sppo[0].bounds(), Some((1.0, 8.0)));
        assert_eq!(
            sppo[0].initial_values(),
            [2.0, 3.0, 4.0].map(ParamValue::Number)
        );
        assert_eq!(sppo[1].name(), "lambda");
        assert_eq!(sppo[1].scale(), Some(Scale::Exponential));
        assert_eq!(sppo[1].step(), Some(10.0));
        assert_eq!(sppo[1].bounds(), Some((1e-15, 1e2)));
        assert_eq!(
            sppo[1].initial_values(),
            [1e-12, 1e-8, 1e-4].map(ParamValue::Number)
        );

        let esn = default_grid(MethodName::EsnS);
        let names: Vec<&str> = esn.iter().map(ParamDomain::name).collect();
        assert_eq!(names, ["c", "lambda", "psi", "r"]);
        let (options, policy) = esn[3].options().unwrap();
        assert_eq!(policy, CategoricalPolicy::Persistent);
        assert_eq!(options, [1.0, 2.0, 3.0, 4.0].map(ParamValue::Number));
        assert_eq!(
            esn[2].initial_values(),
            [0.0, 1.0].map(ParamValue::Number),
            "the forward skip starts from {{0, 1}}"
        );
    }

    /// Every tuned method must accept the configurations its own default
    /// grid produces — parameter names and ranges have to line up with the
    /// fitting front end.
    #[test]
    fn initial_grid_configs_fit_without_parameter_errors() {
        let n = 60;
        let times: Vec<f64> = (1..=n).map(|i| i as f64 * 0.05).collect();
        let states = times
            .iter()
            .map(|&t| State::from_row_slice(&[(0.7 * t).sin(), 0.5 * (1.3 * t).cos()]))
            .collect();
        let train = TimeSeries::new(times, states).unwrap();

        for method in [
            MethodName::Analog,
            MethodName::LinD,
            MethodName::RaFeD,
            MethodName::EsnS,
            MethodName::PgGpD,
            MethodName::PgLlST,
            MethodName::LlNn,
            MethodName::SpPo,
            MethodName::SpGp,
            MethodName::GpGp,
            MethodName::SINDy,
        ] {
            let domains = default_grid(method);
            let config = next_grid(&TuneState::new(method.as_str()), &domains)
                .into_iter()
                .next()
                .unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(11);
            fit(&config, &train, &mut rng)
                .unwrap_or_else(|e| panic!("{method} rejected its own default grid: {e}"));
        }
    }

    #[test]
    fn convex_scores_walk_to_the_lattice_minimum() {
        let domains =
            vec![ParamDomain::exponential("lambda", 10.0, (1e-15, 1e2), &[1e-12, 1e-8, 1e-4])
                .unwrap()];
        // Convex in the lattice offset, minimized at 1e-13.
        let score = |config: &MethodConfig| {
            let exponent = number(config, "lambda").log10();
            Ok((exponent + 13.0).powi(2) / 400.0)
        };

        // Memoization guard: any repeated canonical key is a bug.
        let mut seen = HashSet::new();
        let outcome = local_grid_search("LinD", &domains, DEFAULT_MAX_EVALS, |config| {
            assert!(seen.insert(config.canonical()), "re-evaluated {config:?}");
            score(config)
        })
        .unwrap();

        // Brute force over every lattice point.
        let lat = lattice(&domains[0]);
        let brute = (lat.lo_idx..=lat.hi_idx)
            .map(|i| {
                let config = MethodConfig::new("LinD").with("lambda", lat.value(LatticePoint::Index(i)));
                score(&config).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(outcome.best_score, brute);
        assert!(close(number(&outcome.best, "lambda"), 1e-13));

        // Walk: {1e-12, 1e-8, 1e-4}, then {1e-13, 1e-11}, then {1e-14};
        // the last round finds every neighbor evaluated and stops.
        assert_eq!(outcome.trace.len(), 6);
        let steps: Vec<usize> = outcome.trace.iter().map(|r| r.step).collect();
        assert_eq!(steps, [0, 0, 0, 1, 1, 2]);
        assert_eq!(
            outcome.best_score,
            outcome
                .trace
                .iter()
                .map(|r| r.mean_cme)
                .fold(f64::INFINITY, f64::min),
            "the reported best must be the minimum of the trace"
        );
    }

    #[test]
    fn adjoined_zero_is_reachable_and_escapable() {
        let domains =
            vec![ParamDomain::exponential("psi", 2.0, (1.0, 64.0), &[0.0, 1.0]).unwrap()];

        // Minimum at the adjoined zero: both initial points are evaluated,
        // zero wins, and its whole neighborhood is already known.
        let outcome = local_grid_search("RaFeD", &domains, DEFAULT_MAX_EVALS, |config| {
            Ok(if number(config, "psi") == 0.0 { 0.1 } else { 0.3 })
        })
        .unwrap();
        assert_eq!(number(&outcome.best, "psi"), 0.0);
        assert_eq!(outcome.trace.len(), 2);

        // Scores fall with psi: the search climbs the doubling lattice from
        // 1 all the way to 64 (one new point per round).
        let outcome = local_grid_search("RaFeD", &domains, DEFAULT_MAX_EVALS, |config| {
            Ok(1.0 / (2.0 + number(config, "psi")))
        })
        .unwrap();
        assert_eq!(number(&outcome.best, "psi"), 64.0);
        let visited: Vec<f64> = outcome
            .trace
            .iter()
            .map(|r| number(&r.config, "psi"))
            .collect();
        assert_eq!(visited, [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
    }

    #[test]
    fn persistent_categoricals_reenter_later_rounds() {
        let score = |config: &MethodConfig| {
            let x = number(config, "x");
            let handicap = match config.params.get("mode") {
                Some(ParamValue::Text(mode)) if mode == "b" => 0.05,
                _ => 0.0,
            };
            Ok((x - 7.0).abs() / 20.0 + handicap)
        };
        let options = vec![
            ParamValue::Text("a".into()),
            ParamValue::Text("b".into()),
        ];
        let x_domain = ParamDomain::linear("x", 1.0, (0.0, 10.0), &[5.0]).unwrap();

        for (policy, expect_b_after_start) in [
            (CategoricalPolicy::Persistent, true),
            (CategoricalPolicy::Yielding, false),
        ] {
            let domains = vec![
                ParamDomain::categorical("mode", options.clone(), policy).unwrap(),
                x_domain.clone(),
            ];
            let outcome =
                local_grid_search("synthetic", &domains, DEFAULT_MAX_EVALS, score).unwrap();
            assert_eq!(outcome.best.params["mode"], ParamValue::Text("a".into()));
            assert_eq!(number(&outcome.best, "x"), 7.0);

            let b_after_start = outcome
                .trace
                .iter()
                .filter(|r| r.step > 0)
                .any(|r| r.config.params["mode"] == ParamValue::Text("b".into()));
            assert_eq!(
                b_after_start, expect_b_after_start,
                "{policy:?}: a yielded option must vanish after round 0, \
                 a persistent one must keep appearing"
            );
        }
    }

    #[test]
    fn equal_scores_keep_the_first_initial_configuration() {
        let domains = default_grid(MethodName::LinD);
        let outcome =
            local_grid_search("LinD", &domains, DEFAULT_MAX_EVALS, |_| Ok(0.5)).unwrap();
        assert_eq!(outcome.best, outcome.trace[0].config);
        assert_eq!(outcome.best_score, 0.5);
        assert_eq!(number(&outcome.best, "K"), 0.0);
        assert_eq!(number(&outcome.best, "lambda"), 1e-12);
    }

    #[test]
    fn the_budget_caps_the_number_of_evaluations() {
        let domains = default_grid(MethodName::LinD);
        // A budget of exactly the initial grid runs exactly one round.
        let outcome = local_grid_search("LinD", &domains, 36, |_| Ok(0.5)).unwrap();
        assert_eq!(outcome.trace.len(), 36);
        assert!(outcome.trace.iter().all(|r| r.step == 0));
        // A smaller budget cuts the initial round short.
        let outcome = local_grid_search("LinD", &domains, 10, |_| Ok(0.5)).unwrap();
        assert_eq!(outcome.trace.len(), 10);
        // No budget at all: nothing to report.
        assert!(matches!(
            local_grid_search("LinD", &domains, 0, |_| Ok(0.5)),
            Err(TuneError::NothingEvaluated)
        ));
    }

    #[test]
    fn failures_score_one_and_act_as_walls() {
        let domains = vec![ParamDomain::linear("K", 1.0, (0.0, 32.0), &[4.0]).unwrap()];
        let outcome = local_grid_search("synthetic", &domains, DEFAULT_MAX_EVALS, |config| {
            let k = number(config, "K");
            if (k as i64) % 2 == 0 {
                Err("even configurations diverge".into())
            } else {
                Ok((k - 7.0).abs() / 100.0)
            }
        })
        .unwrap();

        // The search starts on the failing K=4, moves to K=5, and the
        // failures at K=4 and K=6 wall off the true optimum at K=7.
        assert_eq!(number(&outcome.best, "K"), 5.0);
        assert_eq!(outcome.best_score, 0.02);
        let scored: Vec<(f64, f64)> = outcome
            .trace
            .iter()
            .map(|r| (number(&r.config, "K"), r.mean_cme))
            .collect();
        assert_eq!(
            scored,
            [(4.0, 1.0), (3.0, 0.04), (5.0, 0.02), (6.0, 1.0)],
            "failed evaluations must be recorded with the worst score"
        );
    }

    #[test]
    fn methods_without_domains_are_evaluated_once() {
        let outcome = local_grid_search("PwNn", &[], DEFAULT_MAX_EVALS, |config| {
            assert!(config.params.is_empty());
            Ok(0.3)
        })
        .unwrap();
        assert_eq!(outcome.trace.len(), 1);
        assert_eq!(outcome.trace[0].step, 0);
        assert_eq!(outcome.best_score, 0.3);
    }

    #[test]
    fn trace_records_round_trip_as_json_objects() {
        let record = TraceRecord {
            config: MethodConfig::new("LinD").with("K", 1.0).with("lambda", 1e-8),
            mean_cme: 0.25,
            step: 3,
        };
        let json = serde_json::to_string(&record).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let keys: Vec<&String> = value.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["config", "mean_cme", "step"]);
        let back: TraceRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, record);
    }

    /// Deterministic pseudo-random score in [0, 1) from the canonical
    /// serialization, so arbitrary (non-convex) landscapes are exercised.
    fn hashed_score(config: &MethodConfig) -> f64 {
        let mut hasher = DefaultHasher::new();
        config.canonical().hash(&mut hasher);
        (hasher.finish() % 4096) as f64 / 4096.0
    }

    proptest! {
        /// On arbitrary small lattices with arbitrary deterministic scores,
        /// the search terminates within budget, never repeats a
        /// configuration, reports the trace minimum as best (earliest on
        /// ties), and labels rounds consecutively.
        #[test]
        fn search_invariants_hold_on_random_lattices(
            hi in 2.0f64..12.0,
            starts in proptest::collection::vec(0i64..12, 1..3),
            factor_domain in proptest::bool::ANY,
            with_categorical in proptest::bool::ANY,
            salt in 0u64..1000,
        ) {
            let mut domains = Vec::new();
            if factor_domain {
                let initial: Vec<f64> =
                    starts.iter().map(|&i| 0.5 * 2f64.powi(i as i32 % 5)).collect();
                domains.push(
                    ParamDomain::exponential("p", 2.0, (0.25, 32.0), &initial).unwrap(),
                );
            } else {
                let initial: Vec<f64> =
                    starts.iter().map(|&i| (i as f64) % hi.floor()).collect();
                domains.push(ParamDomain::linear("p", 1.0, (0.0, hi), &initial).unwrap());
            }
            if with_categorical {
                domains.push(
                    ParamDomain::categorical(
                        "opt",
                        vec![ParamValue::Text("u".into()), ParamValue::Text("v".into())],
                        if salt % 2 == 0 {
                            CategoricalPolicy::Persistent
                        } else {
                            CategoricalPolicy::Yielding
                        },
                    )
                    .unwrap(),
                );
            }

            let mut seen = HashSet::new();
            let outcome = local_grid_search("synthetic", &domains, DEFAULT_MAX_EVALS, |config| {
                assert!(seen.insert(config.canonical()), "config evaluated twice");
                let mut config = config.clone();
                config.params.insert("salt".into(), ParamValue::Number(salt as f64));
                Ok(hashed_score(&config))
            })?;

            prop_assert!(outcome.trace.len() < DEFAULT_MAX_EVALS,
                "small lattices terminate well within budget");
            let min = outcome
                .trace
                .iter()
                .map(|r| r.mean_cme)
                .fold(f64::INFINITY, f64::min);
            prop_assert_eq!(outcome.best_score, min);
            let first_min = outcome.trace.iter().find(|r| r.mean_cme == min).unwrap();
            prop_assert_eq!(&first_min.config, &outcome.best);

            prop_assert_eq!(outcome.trace[0].step, 0);
            for pair in outcome.trace.windows(2) {
                let (a, b) = (pair[0].step, pair[1].step);
                prop_assert!(b == a || b == a + 1, "round labels must be consecutive");
            }
        }
    }
}
