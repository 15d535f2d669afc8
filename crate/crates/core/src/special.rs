//! Hurwitz zeta, its derivative in `s`, and the digamma function.
//!
//! Both zeta routines use Euler–Maclaurin summation after shifting `q` past 10,
//! Bernoulli corrections up to `B_24`; for `Re s > -20` and `q > 0` this is good
//! to a few ulps of the leading term.

/// B_2, B_4, ..., B_24.
const BERNOULLI: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

// Direct summation runs until q + N reaches this; larger values lose digits to
// cancellation against the pole term when s < 0.
const SHIFT_TARGET: f64 = 10.0;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Value and `s`-derivative of the Hurwitz zeta function, computed together.
pub fn hurwitz_zeta_with_derivative(s: f64, q: f64) -> (f64, f64) {
    assert!(q > 0.0, "hurwitz zeta needs q > 0, got {q}");
    assert!(s != 1.0, "hurwitz zeta has a pole at s = 1");
    let mut val = 0.0;
    let mut der = 0.0;
    let cut = (SHIFT_TARGET - q).ceil().max(0.0) as usize;
    for k in 0..cut {
        let x = q + k as f64;
        let p = x.powf(-s);
        val += p;
        der -= p * x.ln();
    }
    let x = q + cut as f64;
    let lx = x.ln();
    let xs = x.powf(-s);
    // x^{1-s}/(s-1)
    let sm1 = s - 1.0;
    val += x * xs / sm1;
    der += x * xs * (-lx / sm1 - 1.0 / (sm1 * sm1));
    val += 0.5 * xs;
    der -= 0.5 * xs * lx;
    // Rising factorial (s)_{2j-1} and its derivative, built incrementally.
    let mut poch = s;
    let mut dpoch = 1.0;
    let mut xpow = xs / x;
    for (j, b) in BERNOULLI.iter().enumerate() {
        let jj = j + 1;
        let c = b / factorial(2 * jj);
        val += c * poch * xpow;
        der += c * (dpoch * xpow - poch * xpow * lx);
        // advance (s)_{2j-1} -> (s)_{2j+1}
        let a1 = s + (2 * jj - 1) as f64;
        let a2 = s + (2 * jj) as f64;
        dpoch = dpoch * a1 * a2 + poch * (a1 + a2);
        poch *= a1 * a2;
        xpow /= x * x;
    }
    (val, der)
}

pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    hurwitz_zeta_with_derivative(s, q).0
}

/// `∂/∂s ζ(s, q)`.
pub fn hurwitz_zeta_deriv(s: f64, q: f64) -> f64 {
    hurwitz_zeta_with_derivative(s, q).1
}

/// Riemann `ζ'(-1)`.
pub fn zeta_prime_minus_one() -> f64 {
    hurwitz_zeta_deriv(-1.0, 1.0)
}

/// Digamma function for `x > 0`.
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0, "digamma implemented for x > 0 only, got {x}");
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut series = 0.0;
    let mut p = inv2;
    for (j, b) in BERNOULLI.iter().take(8).enumerate() {
        series += b / (2.0 * (j + 1) as f64) * p;
        p *= inv2;
    }
    acc + x.ln() - 0.5 / x - series
}

/// `ln Γ(n + 1)` for small non-negative integers, summed exactly in floating point.
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}
