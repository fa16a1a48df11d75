use crate::Scalar;

use super::{AgreementError, DistanceMetric, ReliabilityData};

/// Symmetric value-pair matrix built from within-unit pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceMatrix<T> {
    domain: Vec<i8>,
    /// Row-major `k x k` over `domain`.
    o: Vec<T>,
    marginals: Vec<T>,
    total: T,
    units_used: usize,
}

impl<T: Scalar> CoincidenceMatrix<T> {
    pub fn domain(&self) -> &[i8] {
        &self.domain
    }

    fn index(&self, value: i8) -> Option<usize> {
        self.domain.binary_search(&value).ok()
    }

    /// `o[c][k]`; zero for values outside the domain.
    pub fn get(&self, c: i8, k: i8) -> T {
        match (self.index(c), self.index(k)) {
            (Some(i), Some(j)) => self.o[i * self.domain.len() + j].clone(),
            _ => T::zero(),
        }
    }

    pub fn marginal(&self, c: i8) -> T {
        self.index(c).map_or_else(T::zero, |i| self.marginals[i].clone())
    }

    /// Number of pairable values `n`.
    pub fn total(&self) -> &T {
        &self.total
    }

    pub fn units_used(&self) -> usize {
        self.units_used
    }
}

/// Units with fewer than two present values are skipped. A unit with `m`
/// values adds `1 / (m - 1)` to `o[a][b]` for every ordered pair of distinct
/// cells holding values `a` and `b`.
pub fn coincidence_matrix<T: Scalar>(data: &ReliabilityData) -> Result<CoincidenceMatrix<T>, AgreementError> {
    let domain = data.domain().to_vec();
    let k = domain.len();
    let mut o = vec![T::zero(); k * k];
    let mut units_used = 0;
    let mut counts = vec![0usize; k];
    for u in 0..data.unit_ids().len() {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut m = 0;
        for v in data.unit(u).iter().flatten() {
            counts[domain.binary_search(v).expect("validated domain")] += 1;
            m += 1;
        }
        if m < 2 {
            continue;
        }
        units_used += 1;
        let weight = T::one() / T::from_count(m - 1);
        for i in 0..k {
            if counts[i] == 0 {
                continue;
            }
            for j in 0..k {
                let pairs = if i == j { counts[i] * (counts[i] - 1) } else { counts[i] * counts[j] };
                if pairs > 0 {
                    o[i * k + j] = o[i * k + j].clone() + T::from_count(pairs) * weight.clone();
                }
            }
        }
    }
    if units_used == 0 {
        return Err(AgreementError::InsufficientPairedData);
    }
    let marginals: Vec<T> =
        (0..k).map(|i| o[i * k..(i + 1) * k].iter().cloned().fold(T::zero(), |a, b| a + b)).collect();
    let total = marginals.iter().cloned().fold(T::zero(), |a, b| a + b);
    Ok(CoincidenceMatrix { domain, o, marginals, total, units_used })
}

/// Outcome of an alpha computation. `alpha` is `None` when expected
/// disagreement is zero, in which case the coefficient is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaResult<T> {
    pub alpha: Option<T>,
    pub n_units_used: usize,
}

impl<T> AlphaResult<T> {
    pub fn is_degenerate(&self) -> bool {
        self.alpha.is_none()
    }
}

/// `alpha = 1 - D_o / D_e`, with `D_o = (1/n) sum o[c][k] d2(c,k)` and
/// `D_e = 1/(n(n-1)) sum n_c n_k d2(c,k)`.
pub fn krippendorff_alpha<T: Scalar>(
    data: &ReliabilityData,
    metric: DistanceMetric,
) -> Result<AlphaResult<T>, AgreementError> {
    let cm = coincidence_matrix::<T>(data)?;
    let k = cm.domain.len();
    let n = cm.total.clone();
    let mut observed = T::zero();
    let mut expected = T::zero();
    for i in 0..k {
        for j in 0..k {
            let d2: T = metric.delta2(cm.domain[i], cm.domain[j]);
            if d2.is_zero() {
                continue;
            }
            observed = observed + cm.o[i * k + j].clone() * d2.clone();
            expected = expected + cm.marginals[i].clone() * cm.marginals[j].clone() * d2;
        }
    }
    let d_o = observed / n.clone();
    let d_e = expected / (n.clone() * (n - T::one()));
    let alpha = if d_e.is_zero() { None } else { Some(T::one() - d_o / d_e) };
    Ok(AlphaResult { alpha, n_units_used: cm.units_used })
}
