//! Demand computed from individual consumer choice.
//!
//! Each consumer picks the variant with the highest surplus (or nothing, when
//! the outside option is enabled and every surplus is negative). This route
//! never uses adjacent marginal consumers or first-order conditions, so it
//! serves as an independent check on the closed forms elsewhere.

/// Surplus of a consumer with taste `theta` from variant `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Utility {
    /// `theta * v_i - p_i`
    Additive,
    /// `v_i * (theta - p_i)`
    QualityScaled,
}

impl Utility {
    /// `(slope, intercept)` of the surplus line `slope * theta - intercept`.
    fn line(self, v: f64, p: f64) -> (f64, f64) {
        match self {
            Utility::Additive => (v, p),
            Utility::QualityScaled => (v, v * p),
        }
    }
}

/// Taste distribution measured through its cumulative mass.
pub trait TasteMeasure {
    fn support(&self) -> (f64, f64);
    /// Mass of consumers with taste below `theta`, clamped to the support.
    fn mass_below(&self, theta: f64) -> f64;
}

/// Unit density on `[lo, hi]`, so mass equals interval length.
#[derive(Debug, Clone, Copy)]
pub struct UnitDensity {
    pub lo: f64,
    pub hi: f64,
}

impl TasteMeasure for UnitDensity {
    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn mass_below(&self, theta: f64) -> f64 {
        theta.clamp(self.lo, self.hi) - self.lo
    }
}

/// Taste interval served by firm `i`, empty intervals returned as `None`.
pub fn served_interval(
    qualities: &[f64],
    prices: &[f64],
    i: usize,
    utility: Utility,
    support: (f64, f64),
    outside_option: bool,
) -> Option<(f64, f64)> {
    let (a_i, b_i) = utility.line(qualities[i], prices[i]);
    let (mut lower, mut upper) = support;
    for (j, (&v, &p)) in qualities.iter().zip(prices).enumerate() {
        if j == i {
            continue;
        }
        let (a_j, b_j) = utility.line(v, p);
        // a_i theta - b_i > a_j theta - b_j  <=>  (a_i - a_j) theta > b_i - b_j
        let cut = (b_i - b_j) / (a_i - a_j);
        if a_i > a_j {
            lower = lower.max(cut);
        } else {
            upper = upper.min(cut);
        }
    }
    if outside_option {
        lower = lower.max(b_i / a_i);
    }
    (upper > lower).then_some((lower, upper))
}

/// Mass of consumers buying from firm `i`.
pub fn demand<M: TasteMeasure>(
    qualities: &[f64],
    prices: &[f64],
    i: usize,
    utility: Utility,
    measure: &M,
    outside_option: bool,
) -> f64 {
    served_interval(
        qualities,
        prices,
        i,
        utility,
        measure.support(),
        outside_option,
    )
    .map_or(0.0, |(lo, hi)| {
        measure.mass_below(hi) - measure.mass_below(lo)
    })
}

/// `(p_i - c_i) * demand_i`.
pub fn profit<M: TasteMeasure>(
    qualities: &[f64],
    prices: &[f64],
    cost: f64,
    i: usize,
    utility: Utility,
    measure: &M,
    outside_option: bool,
) -> f64 {
    (prices[i] - cost) * demand(qualities, prices, i, utility, measure, outside_option)
}
