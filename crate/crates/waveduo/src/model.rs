//! Problem description: the uniform grid on [0, 1], piecewise-constant
//! coefficient profiles, physical parameters, and initial data for
//!
//! ```text
//! u_tt - a u_xx + b(x) y_t + c(x) u_t = 0
//! y_tt -   y_xx - b(x) u_t           = 0
//! ```
//!
//! with homogeneous Dirichlet conditions. The damping c acts on u only and
//! must be nonnegative; the coupling b may take either sign.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("interior node count must be at least 2, got {0}")]
    GridTooSmall(usize),
    #[error("profile interval [{lo}, {hi}] must satisfy lo <= hi")]
    PieceReversed { lo: f64, hi: f64 },
    #[error("profile interval [{lo}, {hi}] is not inside [0, 1]")]
    PieceOutOfDomain { lo: f64, hi: f64 },
    #[error("profile amplitude must be finite, got {0}")]
    BadAmplitude(f64),
    #[error("unknown profile case '{0}' (valid names: b1-b5, c1-c5)")]
    UnknownCase(String),
    #[error("cannot parse profile '{text}': {reason}")]
    BadProfileText { text: String, reason: String },
    #[error("damping profile takes negative value {min} at x = {at}")]
    NegativeDamping { min: f64, at: f64 },
    #[error("wave speed a must be positive and finite, got {0}")]
    BadWaveSpeed(f64),
    #[error("tabulated initial data has {got} values, expected {want}")]
    TabulatedLength { got: usize, want: usize },
    #[error("initial displacement must vanish at the boundary, found ({at0}, {at1})")]
    BoundaryMismatch { at0: f64, at1: f64 },
}

/// Uniform grid on [0, 1] with N interior nodes: x_j = j*dx for
/// j = 0..=N+1 and dx = 1/(N+1). Nodes 0 and N+1 are the Dirichlet boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self, ModelError> {
        if n < 2 {
            return Err(ModelError::GridTooSmall(n));
        }
        Ok(GridSpec { n })
    }

    /// Number of interior nodes N.
    pub fn interior(&self) -> usize {
        self.n
    }

    /// Total node count N + 2 including both boundary nodes.
    pub fn node_count(&self) -> usize {
        self.n + 2
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.n as f64 + 1.0)
    }

    /// Coordinate of node j. The last node is pinned to exactly 1.
    pub fn node(&self, j: usize) -> f64 {
        debug_assert!(j <= self.n + 1);
        if j == self.n + 1 {
            1.0
        } else {
            j as f64 * self.dx()
        }
    }
}

/// One constant piece of a profile: `amplitude` on the closed interval [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePiece {
    pub lo: f64,
    pub hi: f64,
    pub amplitude: f64,
}

/// Piecewise-constant coefficient on [0, 1], represented as a sum of constant
/// pieces over closed intervals. Overlapping pieces add; endpoints belong to
/// their piece, so a node exactly on an endpoint receives the amplitude.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefficientProfile {
    pieces: Vec<ProfilePiece>,
}

impl CoefficientProfile {
    pub fn zero() -> Self {
        CoefficientProfile { pieces: Vec::new() }
    }

    pub fn from_pieces<I>(pieces: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (f64, f64, f64)>,
    {
        let mut out = Vec::new();
        for (lo, hi, amplitude) in pieces {
            if !(lo <= hi) {
                return Err(ModelError::PieceReversed { lo, hi });
            }
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
                return Err(ModelError::PieceOutOfDomain { lo, hi });
            }
            if !amplitude.is_finite() {
                return Err(ModelError::BadAmplitude(amplitude));
            }
            out.push(ProfilePiece { lo, hi, amplitude });
        }
        Ok(CoefficientProfile { pieces: out })
    }

    pub fn pieces(&self) -> &[ProfilePiece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.amplitude == 0.0)
    }

    /// Pointwise value: the sum of amplitudes of all pieces containing x.
    pub fn value_at(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .filter(|p| p.lo <= x && x <= p.hi)
            .map(|p| p.amplitude)
            .sum()
    }

    /// Exact minimum over [0, 1] and a point attaining it. The profile is
    /// piecewise constant, so checking every piece endpoint and every
    /// midpoint between consecutive breakpoints is exhaustive.
    pub fn min_with_location(&self) -> (f64, f64) {
        let mut points: Vec<f64> = vec![0.0, 1.0];
        for p in &self.pieces {
            points.push(p.lo);
            points.push(p.hi);
        }
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup();
        let mut candidates = points.clone();
        for w in points.windows(2) {
            candidates.push(0.5 * (w[0] + w[1]));
        }
        let mut best = (f64::INFINITY, 0.0);
        for x in candidates {
            let v = self.value_at(x);
            if v < best.0 {
                best = (v, x);
            }
        }
        best
    }
}

/// The built-in indicator profiles used by the experiment catalog. `b` and
/// `c` names share shapes: 1 = zero, 2 = all of [0, 1],
/// 3 = [0.1, 0.2] and [0.8, 0.9], 4 = [0.1, 0.2], 5 = [0.4, 0.6],
/// each with unit amplitude.
pub fn named_case(name: &str) -> Result<CoefficientProfile, ModelError> {
    let shape = match name {
        "b1" | "c1" => vec![],
        "b2" | "c2" => vec![(0.0, 1.0, 1.0)],
        "b3" | "c3" => vec![(0.1, 0.2, 1.0), (0.8, 0.9, 1.0)],
        "b4" | "c4" => vec![(0.1, 0.2, 1.0)],
        "b5" | "c5" => vec![(0.4, 0.6, 1.0)],
        _ => return Err(ModelError::UnknownCase(name.to_string())),
    };
    CoefficientProfile::from_pieces(shape)
}

/// Parses a profile from text: either a catalog name ("b3") or an inline
/// indicator such as "indicator:0.1-0.2,0.8-0.9@2.5". Intervals are
/// comma-separated `lo-hi` pairs; the optional `@amplitude` suffix applies to
/// all of them and defaults to 1.
pub fn parse_profile(text: &str) -> Result<CoefficientProfile, ModelError> {
    let bad = |reason: &str| ModelError::BadProfileText {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    if let Some(body) = text.strip_prefix("indicator:") {
        let (intervals, amplitude) = match body.split_once('@') {
            Some((ints, amp)) => {
                let amplitude: f64 = amp
                    .parse()
                    .map_err(|_| bad(&format!("bad amplitude '{amp}'")))?;
                (ints, amplitude)
            }
            None => (body, 1.0),
        };
        let mut pieces = Vec::new();
        for part in intervals.split(',') {
            let (lo, hi) = part
                .split_once('-')
                .ok_or_else(|| bad(&format!("interval '{part}' is not of the form lo-hi")))?;
            let lo: f64 = lo
                .trim()
                .parse()
                .map_err(|_| bad(&format!("bad endpoint '{lo}'")))?;
            let hi: f64 = hi
                .trim()
                .parse()
                .map_err(|_| bad(&format!("bad endpoint '{hi}'")))?;
            pieces.push((lo, hi, amplitude));
        }
        if pieces.is_empty() {
            return Err(bad("no intervals given"));
        }
        CoefficientProfile::from_pieces(pieces)
    } else {
        named_case(text)
    }
}

/// Samples a profile at every grid node, including the boundary nodes.
pub fn sample_profile(profile: &CoefficientProfile, grid: &GridSpec) -> Vec<f64> {
    (0..grid.node_count())
        .map(|j| profile.value_at(grid.node(j)))
        .collect()
}

/// Physical parameters of one run: wave speed a of the u-component, coupling
/// profile b, and the (nonnegative) damping profile c acting on u.
#[derive(Debug, Clone)]
pub struct PhysicalConfig {
    pub a: f64,
    pub b: CoefficientProfile,
    pub c: CoefficientProfile,
}

impl PhysicalConfig {
    pub fn new(
        a: f64,
        b: CoefficientProfile,
        c: CoefficientProfile,
    ) -> Result<Self, ModelError> {
        if !a.is_finite() || a <= 0.0 {
            return Err(ModelError::BadWaveSpeed(a));
        }
        let (min, at) = c.min_with_location();
        if min < 0.0 {
            return Err(ModelError::NegativeDamping { min, at });
        }
        Ok(PhysicalConfig { a, b, c })
    }
}

/// Closed-form or tabulated description of one initial field on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub enum InitialFn {
    Zero,
    /// scale * x * (x - 1); vanishes at both ends.
    Parabola { scale: f64 },
    /// scale * sin(mode * pi * x); vanishes at both ends for integer modes.
    SineMode { mode: u32, scale: f64 },
    /// Explicit node values; the length must be the grid's node count.
    Tabulated(Vec<f64>),
}

impl InitialFn {
    /// Pointwise evaluation of the closed forms. `Tabulated` is only defined
    /// at grid nodes and must go through [`InitialFn::sample`].
    pub fn eval(&self, x: f64) -> Option<f64> {
        match self {
            InitialFn::Zero => Some(0.0),
            InitialFn::Parabola { scale } => Some(scale * (x * (x - 1.0))),
            InitialFn::SineMode { mode, scale } => {
                Some(scale * (*mode as f64 * std::f64::consts::PI * x).sin())
            }
            InitialFn::Tabulated(_) => None,
        }
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<Vec<f64>, ModelError> {
        match self {
            InitialFn::Tabulated(values) => {
                if values.len() != grid.node_count() {
                    return Err(ModelError::TabulatedLength {
                        got: values.len(),
                        want: grid.node_count(),
                    });
                }
                Ok(values.clone())
            }
            _ => Ok((0..grid.node_count())
                .map(|j| self.eval(grid.node(j)).unwrap())
                .collect()),
        }
    }
}

/// The four initial fields: u and y displacements plus their velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: InitialFn,
    pub u1: InitialFn,
    pub y0: InitialFn,
    pub y1: InitialFn,
}

/// Node samples of the initial data. Displacement boundaries are exactly 0.
#[derive(Debug, Clone)]
pub struct SampledInitialData {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
}

impl InitialData {
    /// Samples all four fields on the grid. Displacements must be compatible
    /// with the Dirichlet condition; their boundary entries are pinned to
    /// exactly 0 after the check so the state invariant holds bitwise.
    pub fn sample(&self, grid: &GridSpec) -> Result<SampledInitialData, ModelError> {
        let mut u0 = self.u0.sample(grid)?;
        let u1 = self.u1.sample(grid)?;
        let mut y0 = self.y0.sample(grid)?;
        let y1 = self.y1.sample(grid)?;
        for v in [&mut u0, &mut y0] {
            let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let (at0, at1) = (v[0], *v.last().unwrap());
            if at0.abs() > 1e-9 * (1.0 + scale) || at1.abs() > 1e-9 * (1.0 + scale) {
                return Err(ModelError::BoundaryMismatch { at0, at1 });
            }
            v[0] = 0.0;
            *v.last_mut().unwrap() = 0.0;
        }
        Ok(SampledInitialData { u0, u1, y0, y1 })
    }
}

/// The catalog's standard initial data: u0 = u1 = x(x-1), y0 = y1 = -x(x-1).
pub fn default_initial_data() -> InitialData {
    InitialData {
        u0: InitialFn::Parabola { scale: 1.0 },
        u1: InitialFn::Parabola { scale: 1.0 },
        y0: InitialFn::Parabola { scale: -1.0 },
        y1: InitialFn::Parabola { scale: -1.0 },
    }
}

/// Selects one of the built-in initial-data families by name.
///
/// * `default`: the catalog's parabola data (see [`default_initial_data`])
/// * `zero`: all four fields zero
/// * `sine:<m>`: u0 = sin(m*pi*x), the other three fields zero
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InitialSelector {
    Default,
    Zero,
    Sine { mode: u32 },
}

impl Default for InitialSelector {
    fn default() -> Self {
        InitialSelector::Default
    }
}

impl InitialSelector {
    pub fn data(&self) -> InitialData {
        match self {
            InitialSelector::Default => default_initial_data(),
            InitialSelector::Zero => InitialData {
                u0: InitialFn::Zero,
                u1: InitialFn::Zero,
                y0: InitialFn::Zero,
                y1: InitialFn::Zero,
            },
            InitialSelector::Sine { mode } => InitialData {
                u0: InitialFn::SineMode { mode: *mode, scale: 1.0 },
                u1: InitialFn::Zero,
                y0: InitialFn::Zero,
                y1: InitialFn::Zero,
            },
        }
    }
}

impl std::fmt::Display for InitialSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialSelector::Default => write!(f, "default"),
            InitialSelector::Zero => write!(f, "zero"),
            InitialSelector::Sine { mode } => write!(f, "sine:{mode}"),
        }
    }
}

impl std::str::FromStr for InitialSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(InitialSelector::Default),
            "zero" => Ok(InitialSelector::Zero),
            _ => match s.strip_prefix("sine:") {
                Some(m) => m
                    .parse()
                    .map(|mode| InitialSelector::Sine { mode })
                    .map_err(|_| format!("bad sine mode in '{s}'")),
                None => Err(format!(
                    "unknown initial data '{s}' (expected default, zero, or sine:<mode>)"
                )),
            },
        }
    }
}

impl TryFrom<String> for InitialSelector {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<InitialSelector> for String {
    fn from(sel: InitialSelector) -> String {
        sel.to_string()
    }
}
