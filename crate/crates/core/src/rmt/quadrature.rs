//! Quadrature for integrands with inverse-square-root endpoint singularities.
//!
//! `int_a^b g(x) / sqrt((x - a)(b - x)) dx` becomes `int_0^pi g(c + h cos t) dt`
//! under `x = c + h cos t` (`c`, `h` the interval center and half-width), which is
//! smooth and periodic in `t`; the midpoint rule in `t` (Gauss-Chebyshev of the
//! first kind) then converges geometrically. Smooth integrands without the weight
//! use Fejer weights on the same nodes.

/// Result of an adaptive evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub nodes: usize,
}

/// `cos t_k` for the `n` midpoint nodes `t_k = (k + 1/2) pi / n`.
pub fn chebyshev_cosines(n: usize) -> impl Iterator<Item = f64> {
    let step = std::f64::consts::PI / n as f64;
    (0..n).map(move |k| ((k as f64 + 0.5) * step).cos())
}

/// Fixed-order rule for `int_lo^hi g(x) / sqrt((x - lo)(hi - x)) dx`.
pub fn chebyshev_sum(lo: f64, hi: f64, n: usize, mut g: impl FnMut(f64) -> f64) -> f64 {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let s: f64 = chebyshev_cosines(n).map(|ct| g(c + h * ct)).sum();
    s * std::f64::consts::PI / n as f64
}

/// Doubles the node count from `initial` until two successive values agree to
/// `rel_tol` (relative); `Err(nodes)` when `max_nodes` is exceeded.
pub fn chebyshev_adaptive(
    lo: f64,
    hi: f64,
    initial: usize,
    max_nodes: usize,
    rel_tol: f64,
    mut g: impl FnMut(f64) -> f64,
) -> Result<Quadrature, usize> {
    let mut n = initial.max(1);
    let mut prev = chebyshev_sum(lo, hi, n, &mut g);
    while n * 2 <= max_nodes {
        n *= 2;
        let next = chebyshev_sum(lo, hi, n, &mut g);
        if !next.is_finite() {
            return Err(n);
        }
        if (next - prev).abs() <= rel_tol * next.abs() {
            return Ok(Quadrature { value: next, nodes: n });
        }
        prev = next;
    }
    Err(n)
}

/// Fejer's first rule for the plain integral `int_lo^hi g(x) dx`, on the same
/// nodes as [`chebyshev_sum`]. Converges geometrically for `g` analytic on the
/// closed interval.
pub fn fejer_sum(lo: f64, hi: f64, n: usize, mut g: impl FnMut(f64) -> f64) -> f64 {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let s: f64 = chebyshev_cosines(n)
        .zip(fejer_weights(n))
        .map(|(ct, w)| w * g(c + h * ct))
        .sum();
    h * s
}

/// [`fejer_sum`] with the doubling rule of [`chebyshev_adaptive`].
pub fn fejer_adaptive(
    lo: f64,
    hi: f64,
    initial: usize,
    max_nodes: usize,
    rel_tol: f64,
    mut g: impl FnMut(f64) -> f64,
) -> Result<Quadrature, usize> {
    let mut n = initial.max(1);
    let mut prev = fejer_sum(lo, hi, n, &mut g);
    while n * 2 <= max_nodes {
        n *= 2;
        let next = fejer_sum(lo, hi, n, &mut g);
        if !next.is_finite() {
            return Err(n);
        }
        if (next - prev).abs() <= rel_tol * next.abs() {
            return Ok(Quadrature { value: next, nodes: n });
        }
        prev = next;
    }
    Err(n)
}

/// Fejer weights on `[-1, 1]` for `n` nodes, in the order of [`chebyshev_cosines`].
pub fn fejer_weights(n: usize) -> Vec<f64> {
    let step = std::f64::consts::PI / n as f64;
    (0..n)
        .map(|k| {
            let two = 2.0 * (2.0 * (k as f64 + 0.5) * step).cos();
            // cos(2jt) by the Chebyshev recurrence
            let (mut prev, mut cur) = (1.0, 0.5 * two);
            let mut s = 0.0;
            for j in 1..=n / 2 {
                let jf = j as f64;
                s += cur / (4.0 * jf * jf - 1.0);
                let next = two * cur - prev;
                prev = cur;
                cur = next;
            }
            2.0 / n as f64 * (1.0 - 2.0 * s)
        })
        .collect()
}
