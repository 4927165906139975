//! Bessel functions of the first kind and binomial coefficients.

/// Bessel function of the first kind of integer order, `J_n(x)`.
///
/// Power series for `|x| <= 1`, Miller's backward recurrence normalized by
/// `J_0 + 2 sum J_2k = 1` otherwise.
pub fn bessel_j(order: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    if x < 0.0 {
        let v = bessel_j(order, -x);
        return if order.is_multiple_of(2) { v } else { -v };
    }
    if x <= 1.0 {
        return series(order, x);
    }
    miller(order, x)
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel_j(0, x)
}

pub fn bessel_j1(x: f64) -> f64 {
    bessel_j(1, x)
}

fn series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=order {
        term *= half / k as f64;
    }
    let mut sum = term;
    let q = -half * half;
    let n = order as f64;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + n));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller(order: u32, x: f64) -> f64 {
    const BIG: f64 = 1e250;
    const SMALL: f64 = 1e-250;
    let scale = (order as f64).max(x);
    let mut start = (scale + 30.0 + (60.0 * scale).sqrt()) as usize;
    start += start % 2;
    let two_over_x = 2.0 / x;
    let mut next = 0.0; // J_{k+1}
    let mut current = 1e-300; // J_k
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for k in (1..=start).rev() {
        let prev = k as f64 * two_over_x * current - next; // J_{k-1}
        next = current;
        current = prev;
        if current.abs() > BIG {
            current *= SMALL;
            next *= SMALL;
            norm *= SMALL;
            wanted *= SMALL;
        }
        let idx = k - 1;
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * current;
        }
        if idx == order as usize {
            wanted = current;
        }
    }
    norm += current;
    wanted / norm
}

/// Binomial coefficient `C(n, k)` as a float.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    // exact below 2^53
    if acc < 9.0e15 {
        acc.round()
    } else {
        acc
    }
}
