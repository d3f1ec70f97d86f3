//! Bessel functions of the first kind by Miller's backward recurrence.

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 64;
pub const MAX_ARG: f64 = 64.0;

// 2^-800; exact power-of-two rescaling keeps the recurrence free of extra rounding.
const RESCALE: f64 = 1.499_696_813_895_631e-241;
const RESCALE_AT: f64 = 1e240;

fn check_domain(order: usize, x: f64) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::Domain(format!(
            "Bessel order {order} above supported maximum {MAX_ORDER}"
        )));
    }
    if !(0.0..=MAX_ARG).contains(&x) {
        return Err(Error::Domain(format!(
            "Bessel argument {x} outside [0, {MAX_ARG}]"
        )));
    }
    Ok(())
}

/// `J_k(x)` for `k ≤ 64`, `0 ≤ x ≤ 64`.
pub fn bessel_j(k: usize, x: f64) -> Result<f64> {
    Ok(bessel_j_sequence(k, x)?[k])
}

/// `[J_0(x), J_1(x), …, J_kmax(x)]`.
///
/// Runs the three-term recurrence `J_{n−1} = (2n/x) J_n − J_{n+1}` downwards from an
/// order well above both `kmax` and `x`, then normalizes with
/// `J_0 + 2 Σ_{m≥1} J_{2m} = 1`. The recurrence is carried in double-double
/// arithmetic so that the accumulated rounding over many steps stays below one
/// FP64 ulp.
pub fn bessel_j_sequence(kmax: usize, x: f64) -> Result<Vec<f64>> {
    check_domain(kmax, x)?;
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }

    let top = (kmax as f64).max(x);
    let mut start = (top + 20.0 + (40.0 * top).sqrt()).ceil() as usize;
    start += start % 2;

    let mut vals = vec![Dd::ZERO; kmax + 1];
    let mut next = Dd::ZERO; // J_{n+1}
    let mut cur = Dd::from(1e-300); // J_n, arbitrary scale
    let mut even_sum = Dd::ZERO; // Σ J_{2m}, m ≥ 1
    for n in (1..=start).rev() {
        if n <= kmax {
            vals[n] = cur;
        }
        if n % 2 == 0 {
            even_sum = even_sum + cur;
        }
        let prev = Dd::quotient(2.0 * n as f64, x) * cur - next;
        next = cur;
        cur = prev;
        if cur.hi.abs() > RESCALE_AT {
            cur = cur.scale(RESCALE);
            next = next.scale(RESCALE);
            even_sum = even_sum.scale(RESCALE);
            vals.iter_mut().for_each(|v| *v = v.scale(RESCALE));
        }
    }
    vals[0] = cur;

    let norm = cur + even_sum + even_sum;
    for (o, v) in out.iter_mut().zip(&vals) {
        *o = (*v / norm).hi;
    }
    Ok(out)
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ½ ulp(hi)`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn fast_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd {
            hi: s,
            lo: b - (s - a),
        }
    }

    fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        Dd {
            hi: p,
            lo: a.mul_add(b, -p),
        }
    }

    /// `a / b` to double-double accuracy.
    fn quotient(a: f64, b: f64) -> Dd {
        let q = a / b;
        let r = (-q).mul_add(b, a);
        Dd::fast_two_sum(q, r / b)
    }

    fn scale(self, s: f64) -> Dd {
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Self {
        Dd { hi, lo: 0.0 }
    }
}

impl std::ops::Add for Dd {
    type Output = Dd;

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let u = Dd::fast_two_sum(s.hi, s.lo + t.hi);
        Dd::fast_two_sum(u.hi, u.lo + t.lo)
    }
}

impl std::ops::Neg for Dd {
    type Output = Dd;

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl std::ops::Sub for Dd {
    type Output = Dd;

    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl std::ops::Mul for Dd {
    type Output = Dd;

    fn mul(self, o: Dd) -> Dd {
        let p = Dd::two_prod(self.hi, o.hi);
        Dd::fast_two_sum(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl std::ops::Div for Dd {
    type Output = Dd;

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from(q2);
        let q3 = r.hi / o.hi;
        let q = Dd::fast_two_sum(q1, q2);
        q + Dd::from(q3)
    }
}
