//! Self-contained statistical kernel.
//!
//! Distribution tails come from the regularized incomplete beta and gamma
//! functions, both implemented here (Lanczos log-gamma, Lentz continued
//! fractions) so the crate carries no numerics dependency and the exact
//! conventions are pinned by tests. On top of the tails sit the three tests
//! the analyses need: a 2x2 chi-square with Yates correction, a two-sided
//! Mann-Whitney U with midrank ties, and Spearman rank correlation.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {min} observations, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("constant input has no rank variance")]
    ConstantInput,
    #[error("contingency table has a zero marginal")]
    ZeroMarginal,
    #[error("degrees of freedom must be >= 1")]
    InvalidDof,
    #[error("non-finite value in input")]
    NonFinite,
}

/// Outcome of a hypothesis test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p: f64,
    pub method: &'static str,
}

const MAX_CF_ITER: usize = 200;
const CF_EPS: f64 = 1e-15;
const CF_TINY: f64 = 1e-300;

/// Lanczos approximation (g = 7), accurate to ~15 significant digits for
/// positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // Reflection keeps small arguments accurate.
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEF.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta (Lentz's method).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_CF_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b) with the complement of x supplied
/// separately, so callers that know 1 - x exactly avoid cancellation.
fn reg_inc_beta_xc(a: f64, b: f64, x: f64, xc: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if xc <= 0.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * xc.ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, xc) / b
    }
}

/// Regularized incomplete beta I_x(a, b).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    reg_inc_beta_xc(a, b, x, 1.0 - x)
}

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x)/Γ(a).
pub fn reg_inc_gamma_upper(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        // Series for P(a, x), then complement.
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..MAX_CF_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * CF_EPS {
                break;
            }
        }
        let p = sum * (a * x.ln() - x - ln_gamma(a)).exp();
        1.0 - p
    } else {
        // Lentz continued fraction for Q(a, x).
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / CF_TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAX_CF_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < CF_TINY {
                d = CF_TINY;
            }
            c = b + an / c;
            if c.abs() < CF_TINY {
                c = CF_TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < CF_EPS {
                break;
            }
        }
        h * (a * x.ln() - x - ln_gamma(a)).exp()
    }
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
pub fn chi2_sf(x: f64, dof: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    reg_inc_gamma_upper(dof as f64 / 2.0, x / 2.0)
}

/// Upper tail of the standard normal distribution.
pub fn normal_sf(z: f64) -> f64 {
    if z < 0.0 {
        return 1.0 - normal_sf(-z);
    }
    // 1 - Φ(z) = Q(1/2, z²/2).
    0.5 * reg_inc_gamma_upper(0.5, z * z / 2.0)
}

/// Upper tail of the F distribution with (d1, d2) degrees of freedom.
/// Both beta arguments are formed directly from d1, d2 and x so the
/// right tail keeps full precision even for huge d2.
pub fn f_sf(x: f64, d1: u32, d2: u32) -> Result<f64, StatsError> {
    if d1 < 1 || d2 < 1 {
        return Err(StatsError::InvalidDof);
    }
    if !x.is_finite() {
        return if x.is_nan() {
            Err(StatsError::NonFinite)
        } else {
            Ok(if x > 0.0 { 0.0 } else { 1.0 })
        };
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    let (d1, d2) = (d1 as f64, d2 as f64);
    let denom = d2 + d1 * x;
    // P(F > x) = I_{d2/(d2+d1x)}(d2/2, d1/2)
    Ok(reg_inc_beta_xc(d2 / 2.0, d1 / 2.0, d2 / denom, d1 * x / denom).clamp(0.0, 1.0))
}

/// Two-sided tail of Student's t with `dof` degrees of freedom.
pub fn t_sf_two_sided(t: f64, dof: u32) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let v = dof as f64;
    let denom = v + t * t;
    reg_inc_beta_xc(v / 2.0, 0.5, v / denom, t * t / denom).clamp(0.0, 1.0)
}

/// Pearson chi-square test on a 2x2 table, with Yates continuity correction
/// when `continuity` is set (the default convention everywhere in this
/// crate). The correction shrinks each |O - E| by 0.5, floored at zero.
pub fn chi2_test_2x2(table: [[u64; 2]; 2], continuity: bool) -> Result<TestResult, StatsError> {
    let row: [f64; 2] = [
        (table[0][0] + table[0][1]) as f64,
        (table[1][0] + table[1][1]) as f64,
    ];
    let col: [f64; 2] = [
        (table[0][0] + table[1][0]) as f64,
        (table[0][1] + table[1][1]) as f64,
    ];
    if row.contains(&0.0) || col.contains(&0.0) {
        return Err(StatsError::ZeroMarginal);
    }
    let n = row[0] + row[1];
    let mut chi2 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = row[i] * col[j] / n;
            let mut dev = (table[i][j] as f64 - expected).abs();
            if continuity {
                dev = (dev - 0.5).max(0.0);
            }
            chi2 += dev * dev / expected;
        }
    }
    Ok(TestResult {
        statistic: chi2,
        p: chi2_sf(chi2, 1),
        method: if continuity { "chi2-yates" } else { "chi2" },
    })
}

/// Midranks of `values` (average rank across ties), 1-based.
pub fn midranks(values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j share the average of ranks i+1..=j+1.
        let rank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    Ok(ranks)
}

fn mwu_from_ranks(pooled_ranks: &[f64], na: usize) -> f64 {
    let rank_sum_a: f64 = pooled_ranks[..na].iter().sum();
    rank_sum_a - (na * (na + 1)) as f64 / 2.0
}

/// Tie-corrected variance of U under the null.
fn mwu_variance(pooled: &[f64], na: usize, nb: usize) -> f64 {
    let n = pooled.len() as f64;
    let mut sorted = pooled.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    (na as f64 * nb as f64 / 12.0) * ((n + 1.0) - tie_term / (n * (n - 1.0)))
}

/// Two-sided Mann-Whitney U. The statistic is U of the first sample (pairs
/// where `a` exceeds `b`, ties counting one half). Small pooled samples
/// (n <= 16) get an exact permutation p; larger ones the normal
/// approximation with tie-corrected variance and continuity correction.
/// The cutoff sits where enumeration (2^n assignments) is still instant;
/// below it, heavy ties can concentrate enough probability at the null
/// mean that the approximation's near-mean error exceeds 0.05.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    if a.len() + b.len() <= 16 {
        mann_whitney_u_exact(a, b)
    } else {
        mann_whitney_u_approx(a, b)
    }
}

/// Exact-permutation variant: p is the null fraction of group assignments
/// whose U deviates from the mean at least as far as the observed one.
pub fn mann_whitney_u_exact(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    let (na, nb) = (a.len(), b.len());
    if na == 0 || nb == 0 {
        return Err(StatsError::EmptySample);
    }
    let n = na + nb;
    assert!(n <= 26, "exact enumeration is exponential; pool of {n} is too large");
    let mut pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let ranks = midranks(&pooled)?;
    let u_obs = mwu_from_ranks(&ranks, na);
    let mu = na as f64 * nb as f64 / 2.0;
    let dev_obs = (u_obs - mu).abs();

    pooled.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let pooled_ranks = midranks(&pooled)?;
    let mut hits = 0u64;
    let mut total = 0u64;
    for mask in 0u64..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        total += 1;
        let mut rank_sum = 0.0;
        for (i, r) in pooled_ranks.iter().enumerate() {
            if mask & (1 << i) != 0 {
                rank_sum += r;
            }
        }
        let u = rank_sum - (na * (na + 1)) as f64 / 2.0;
        if (u - mu).abs() >= dev_obs - 1e-9 {
            hits += 1;
        }
    }
    Ok(TestResult {
        statistic: u_obs,
        p: hits as f64 / total as f64,
        method: "mwu-exact",
    })
}

/// Large-sample variant, public so the approximation itself can be
/// calibrated against the exact path.
pub fn mann_whitney_u_approx(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    let (na, nb) = (a.len(), b.len());
    if na == 0 || nb == 0 {
        return Err(StatsError::EmptySample);
    }
    let pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let ranks = midranks(&pooled)?;
    let u = mwu_from_ranks(&ranks, na);
    let mu = na as f64 * nb as f64 / 2.0;
    let var = mwu_variance(&pooled, na, nb);
    let p = if var <= 0.0 {
        1.0 // every pooled value tied
    } else {
        // Continuity correction pulls U half a unit toward the mean.
        let shift = (u - mu).abs().min(0.5);
        let z = ((u - mu).abs() - shift) / var.sqrt();
        (2.0 * normal_sf(z)).min(1.0)
    };
    Ok(TestResult {
        statistic: u,
        p,
        method: "mwu-normal",
    })
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        None
    } else {
        Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Spearman rank correlation: Pearson correlation of midranks, with a
/// two-sided p from the t approximation on n - 2 degrees of freedom.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(StatsError::TooShort { min: 3, got: x.len() });
    }
    let rx = midranks(x)?;
    let ry = midranks(y)?;
    let rho = pearson(&rx, &ry).ok_or(StatsError::ConstantInput)?;
    let n = x.len() as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * ((n - 2.0) / (1.0 - rho * rho)).sqrt();
        t_sf_two_sided(t, x.len() as u32 - 2)
    };
    Ok(TestResult {
        statistic: rho,
        p,
        method: "spearman-t",
    })
}
