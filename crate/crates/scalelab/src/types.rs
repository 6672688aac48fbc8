//! Domain types shared by every other module. Invariants are enforced at
//! construction; all types are immutable afterwards and safe to share across
//! threads.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ratio of vision tokens to total tokens, measured on the 45-45-10
/// mixture. Callers can override it per record.
pub const DEFAULT_VISION_TOKEN_FRACTION: f64 = 0.544;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Early,
    Late,
    MoeAgnostic,
    MoeAware,
}

impl Arch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Arch::Early => "early",
            Arch::Late => "late",
            Arch::MoeAgnostic => "moe_agnostic",
            Arch::MoeAware => "moe_aware",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "early" => Ok(Arch::Early),
            "late" => Ok(Arch::Late),
            "moe_agnostic" => Ok(Arch::MoeAgnostic),
            "moe_aware" => Ok(Arch::MoeAware),
            other => Err(Error::invariant("arch", format!("unknown arch `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSet {
    Caption,
    Interleaved,
    Text,
    Avg,
}

impl EvalSet {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvalSet::Caption => "caption",
            EvalSet::Interleaved => "interleaved",
            EvalSet::Text => "text",
            EvalSet::Avg => "avg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "caption" => Ok(EvalSet::Caption),
            "interleaved" => Ok(EvalSet::Interleaved),
            "text" => Ok(EvalSet::Text),
            "avg" => Ok(EvalSet::Avg),
            other => Err(Error::invariant(
                "eval_set",
                format!("unknown eval_set `{other}`"),
            )),
        }
    }
}

/// All fields of a run prior to validation. Counts are absolute (not billions)
/// and are held in doubles: budgets up to ~1e22 FLOPs exceed what 32-bit
/// floats resolve, and none of the math needs exact integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub run_id: String,
    pub arch: Arch,
    pub n_active: f64,
    pub n_total: f64,
    #[serde(default)]
    pub n_vision: Option<f64>,
    pub tokens: f64,
    #[serde(default)]
    pub vision_token_fraction: Option<f64>,
    pub mixture: String,
    pub eval_set: EvalSet,
    pub loss: f64,
    #[serde(default)]
    pub figure: Option<String>,
}

/// One training run's observed point. Construction validates every invariant;
/// the fields are read-only afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RunSpec", into = "RunSpec")]
pub struct RunRecord {
    spec: RunSpec,
}

impl TryFrom<RunSpec> for RunRecord {
    type Error = Error;
    fn try_from(spec: RunSpec) -> Result<Self> {
        RunRecord::new(spec)
    }
}

impl From<RunRecord> for RunSpec {
    fn from(r: RunRecord) -> RunSpec {
        r.spec
    }
}

impl RunRecord {
    pub fn new(spec: RunSpec) -> Result<Self> {
        let fail = |field: &str, detail: String| -> Result<Self> {
            Err(Error::InvariantViolation {
                field: field.to_string(),
                detail: format!("run `{}`: {detail}", spec.run_id),
            })
        };
        if !(spec.n_active >= 1.0 && spec.n_active.is_finite()) {
            return fail("n_active", format!("must be >= 1, got {}", spec.n_active));
        }
        if !(spec.n_total >= spec.n_active && spec.n_total.is_finite()) {
            return fail(
                "n_total",
                format!("must be >= n_active, got {}", spec.n_total),
            );
        }
        if !(spec.tokens >= 1.0 && spec.tokens.is_finite()) {
            return fail("tokens", format!("must be >= 1, got {}", spec.tokens));
        }
        if !(spec.loss > 0.0 && spec.loss.is_finite()) {
            return fail("loss", format!("must be > 0, got {}", spec.loss));
        }
        match (spec.arch, spec.n_vision) {
            (Arch::Late, None) => {
                return fail("n_vision", "required for late-fusion runs".to_string());
            }
            (Arch::Late, Some(nv)) if !(nv >= 1.0 && nv < spec.n_total) => {
                return fail(
                    "n_vision",
                    format!("must satisfy 1 <= n_vision < n_total, got {nv}"),
                );
            }
            _ => {}
        }
        if let Some(f) = spec.vision_token_fraction {
            if !(0.0..=1.0).contains(&f) {
                return fail(
                    "vision_token_fraction",
                    format!("must lie in [0, 1], got {f}"),
                );
            }
        }
        Ok(RunRecord { spec })
    }

    pub fn run_id(&self) -> &str {
        &self.spec.run_id
    }
    pub fn arch(&self) -> Arch {
        self.spec.arch
    }
    pub fn n_active(&self) -> f64 {
        self.spec.n_active
    }
    pub fn n_total(&self) -> f64 {
        self.spec.n_total
    }
    pub fn n_vision(&self) -> Option<f64> {
        self.spec.n_vision
    }
    pub fn tokens(&self) -> f64 {
        self.spec.tokens
    }
    pub fn vision_token_fraction(&self) -> Option<f64> {
        self.spec.vision_token_fraction
    }
    pub fn mixture(&self) -> &str {
        &self.spec.mixture
    }
    pub fn eval_set(&self) -> EvalSet {
        self.spec.eval_set
    }
    pub fn loss(&self) -> f64 {
        self.spec.loss
    }
    pub fn figure(&self) -> Option<&str> {
        self.spec.figure.as_deref()
    }

    /// Sparsity S = 1 - active/total; lies in [0, 1) whenever the record is valid.
    pub fn sparsity(&self) -> f64 {
        1.0 - self.spec.n_active / self.spec.n_total
    }

    /// Training FLOPs under the architecture's accounting.
    pub fn flops(&self) -> f64 {
        match self.spec.arch {
            Arch::Late => {
                let nv = self.spec.n_vision.expect("validated at construction");
                let frac = self
                    .spec
                    .vision_token_fraction
                    .unwrap_or(DEFAULT_VISION_TOKEN_FRACTION);
                crate::flops::late_flops(nv, self.spec.n_total - nv, self.spec.tokens, frac)
            }
            _ => crate::flops::early_flops(self.spec.n_active, self.spec.tokens),
        }
    }
}

/// A validated dataset handle grouping records by (arch, mixture, eval_set).
#[derive(Debug, Clone)]
pub struct Dataset {
    records: Vec<RunRecord>,
    groups: BTreeMap<(Arch, String, EvalSet), Vec<usize>>,
}

/// Checks the dataset-level contracts and builds the grouped handle.
/// Per-record invariants were already enforced by `RunRecord::new`.
pub fn validate_dataset(records: Vec<RunRecord>) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut groups: BTreeMap<(Arch, String, EvalSet), Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if !seen.insert((r.run_id().to_string(), r.eval_set())) {
            return Err(Error::DuplicateRun {
                run_id: r.run_id().to_string(),
                eval_set: r.eval_set().as_str().to_string(),
            });
        }
        groups
            .entry((r.arch(), r.mixture().to_string(), r.eval_set()))
            .or_default()
            .push(i);
    }
    Ok(Dataset { records, groups })
}

impl Dataset {
    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> impl Iterator<Item = (&(Arch, String, EvalSet), Vec<&RunRecord>)> {
        self.groups
            .iter()
            .map(|(k, idx)| (k, idx.iter().map(|&i| &self.records[i]).collect()))
    }

    pub fn group(&self, arch: Arch, mixture: &str, eval_set: EvalSet) -> Vec<&RunRecord> {
        self.groups
            .get(&(arch, mixture.to_string(), eval_set))
            .map(|idx| idx.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default()
    }
}

/// Fitted loss surface L = E + A/N^alpha + B/D^beta plus fit metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSurfaceFit {
    pub(crate) e_irreducible: f64,
    pub(crate) a_coef: f64,
    pub(crate) b_coef: f64,
    pub(crate) alpha: f64,
    pub(crate) beta: f64,
    pub(crate) objective: f64,
    pub(crate) winning_init_index: usize,
    pub(crate) converged: bool,
    pub(crate) huber_delta: f64,
}

impl LossSurfaceFit {
    /// The fitter's exponential parameterization guarantees strictly positive
    /// coefficients; hand-built fits may use `a_coef == 0` or `b_coef == 0` to
    /// represent the A, B -> 0 limit.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        e_irreducible: f64,
        a_coef: f64,
        b_coef: f64,
        alpha: f64,
        beta: f64,
        objective: f64,
        winning_init_index: usize,
        converged: bool,
        huber_delta: f64,
    ) -> Result<Self> {
        let fit = LossSurfaceFit {
            e_irreducible,
            a_coef,
            b_coef,
            alpha,
            beta,
            objective,
            winning_init_index,
            converged,
            huber_delta,
        };
        fit.validate()?;
        Ok(fit)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_irreducible > 0.0 && self.e_irreducible.is_finite()) {
            return Err(Error::invariant("e_irreducible", "must be > 0"));
        }
        if !(self.a_coef >= 0.0 && self.a_coef.is_finite()) {
            return Err(Error::invariant("a_coef", "must be >= 0"));
        }
        if !(self.b_coef >= 0.0 && self.b_coef.is_finite()) {
            return Err(Error::invariant("b_coef", "must be >= 0"));
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::invariant("alpha/beta", "must be finite"));
        }
        if !(self.objective >= 0.0) {
            return Err(Error::invariant("objective", "must be >= 0"));
        }
        if !(self.huber_delta > 0.0) {
            return Err(Error::invariant("huber_delta", "must be > 0"));
        }
        Ok(())
    }

    pub fn e_irreducible(&self) -> f64 {
        self.e_irreducible
    }
    pub fn a_coef(&self) -> f64 {
        self.a_coef
    }
    pub fn b_coef(&self) -> f64 {
        self.b_coef
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn objective(&self) -> f64 {
        self.objective
    }
    pub fn winning_init_index(&self) -> usize {
        self.winning_init_index
    }
    pub fn converged(&self) -> bool {
        self.converged
    }
    pub fn huber_delta(&self) -> f64 {
        self.huber_delta
    }
}

/// y = k * x^p over a validity range, with the goodness of the log-space fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub(crate) k: f64,
    pub(crate) p: f64,
    pub(crate) x_min: f64,
    pub(crate) x_max: f64,
    pub(crate) r_squared: f64,
}

impl PowerLawFit {
    pub fn new(k: f64, p: f64, x_min: f64, x_max: f64, r_squared: f64) -> Result<Self> {
        let law = PowerLawFit {
            k,
            p,
            x_min,
            x_max,
            r_squared,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::invariant("k", "must be > 0"));
        }
        if !self.p.is_finite() {
            return Err(Error::invariant("p", "must be finite"));
        }
        if !(self.x_min < self.x_max) {
            return Err(Error::invariant("x_min", "must be < x_max"));
        }
        if !(self.r_squared <= 1.0) {
            return Err(Error::invariant("r_squared", "must be <= 1"));
        }
        Ok(())
    }

    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn r_squared(&self) -> f64 {
        self.r_squared
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.k * x.powf(self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontierSource {
    Regression,
    ClosedForm,
}

/// Derived compute-optimal laws: N ~ C^a, D ~ C^b, D ~ N^d and the N/D ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierLaws {
    pub(crate) n_of_c: PowerLawFit,
    pub(crate) d_of_c: PowerLawFit,
    pub(crate) d_of_n: PowerLawFit,
    pub(crate) ratio_of_c: PowerLawFit,
    pub(crate) source: FrontierSource,
}

impl FrontierLaws {
    pub fn new(
        n_of_c: PowerLawFit,
        d_of_c: PowerLawFit,
        d_of_n: PowerLawFit,
        ratio_of_c: PowerLawFit,
        source: FrontierSource,
    ) -> Result<Self> {
        let laws = FrontierLaws {
            n_of_c,
            d_of_c,
            d_of_n,
            ratio_of_c,
            source,
        };
        laws.validate()?;
        Ok(laws)
    }

    pub fn validate(&self) -> Result<()> {
        self.n_of_c.validate()?;
        self.d_of_c.validate()?;
        self.d_of_n.validate()?;
        self.ratio_of_c.validate()?;
        if self.source == FrontierSource::ClosedForm {
            let sum = self.n_of_c.p + self.d_of_c.p;
            if sum != 1.0 {
                return Err(Error::invariant(
                    "n_of_c.p + d_of_c.p",
                    format!("closed form requires exactly 1, got {sum}"),
                ));
            }
        }
        Ok(())
    }

    pub fn n_of_c(&self) -> &PowerLawFit {
        &self.n_of_c
    }
    pub fn d_of_c(&self) -> &PowerLawFit {
        &self.d_of_c
    }
    pub fn d_of_n(&self) -> &PowerLawFit {
        &self.d_of_n
    }
    pub fn ratio_of_c(&self) -> &PowerLawFit {
        &self.ratio_of_c
    }
    pub fn source(&self) -> FrontierSource {
        self.source
    }
}

/// Sparsity-aware loss surface
/// L = E + A/N^alpha + B/D^beta + C/(1-S)^lambda + d/((1-S)^delta * N^gamma).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseLossSurfaceFit {
    pub(crate) e_irr: f64,
    pub(crate) a_coef: f64,
    pub(crate) b_coef: f64,
    pub(crate) alpha: f64,
    pub(crate) beta: f64,
    pub(crate) lam: f64,
    pub(crate) delta_s: f64,
    pub(crate) gamma: f64,
    pub(crate) c_coef: f64,
    pub(crate) d_coef: f64,
    pub(crate) objective: f64,
    pub(crate) converged: bool,
}

impl SparseLossSurfaceFit {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        e_irr: f64,
        a_coef: f64,
        b_coef: f64,
        alpha: f64,
        beta: f64,
        lam: f64,
        delta_s: f64,
        gamma: f64,
        c_coef: f64,
        d_coef: f64,
        objective: f64,
        converged: bool,
    ) -> Result<Self> {
        let fit = SparseLossSurfaceFit {
            e_irr,
            a_coef,
            b_coef,
            alpha,
            beta,
            lam,
            delta_s,
            gamma,
            c_coef,
            d_coef,
            objective,
            converged,
        };
        fit.validate()?;
        Ok(fit)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("e_irr", self.e_irr),
            ("a_coef", self.a_coef),
            ("b_coef", self.b_coef),
            ("c_coef", self.c_coef),
            ("d_coef", self.d_coef),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invariant(name, "must be > 0"));
            }
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("lam", self.lam),
            ("delta_s", self.delta_s),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() {
                return Err(Error::invariant(name, "must be finite"));
            }
        }
        if !(self.objective >= 0.0) {
            return Err(Error::invariant("objective", "must be >= 0"));
        }
        Ok(())
    }

    pub fn e_irr(&self) -> f64 {
        self.e_irr
    }
    pub fn a_coef(&self) -> f64 {
        self.a_coef
    }
    pub fn b_coef(&self) -> f64 {
        self.b_coef
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn lam(&self) -> f64 {
        self.lam
    }
    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn c_coef(&self) -> f64 {
        self.c_coef
    }
    pub fn d_coef(&self) -> f64 {
        self.d_coef
    }
    pub fn objective(&self) -> f64 {
        self.objective
    }
    pub fn converged(&self) -> bool {
        self.converged
    }
}

/// Text/image token counts routed to one (layer, expert) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    pub text_tokens: u64,
    pub image_tokens: u64,
}

/// Per-layer, per-expert routing counts for one data source.
/// `num_experts` is the expert count of the router (8 in the reference setup).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentTable {
    source: String,
    num_layers: usize,
    num_experts: usize,
    counts: Vec<TokenCounts>, // layer-major: index = layer * num_experts + expert
}

impl AssignmentTable {
    pub fn new(
        source: String,
        num_layers: usize,
        num_experts: usize,
        counts: Vec<TokenCounts>,
    ) -> Result<Self> {
        if num_layers == 0 || num_experts == 0 {
            return Err(Error::invariant(
                "num_layers/num_experts",
                "must be positive",
            ));
        }
        if counts.len() != num_layers * num_experts {
            return Err(Error::invariant(
                "counts",
                format!(
                    "every (layer, expert) cell must be present: expected {} cells, got {}",
                    num_layers * num_experts,
                    counts.len()
                ),
            ));
        }
        Ok(AssignmentTable {
            source,
            num_layers,
            num_experts,
            counts,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }
    pub fn num_layers(&self) -> usize {
        self.num_layers
    }
    pub fn num_experts(&self) -> usize {
        self.num_experts
    }

    pub fn cell(&self, layer: usize, expert: usize) -> Result<TokenCounts> {
        if layer >= self.num_layers {
            return Err(Error::LayerNotFound {
                layer,
                num_layers: self.num_layers,
            });
        }
        if expert >= self.num_experts {
            return Err(Error::invariant(
                "expert",
                format!("expert {expert} out of range (table has {})", self.num_experts),
            ));
        }
        Ok(self.counts[layer * self.num_experts + expert])
    }
}
