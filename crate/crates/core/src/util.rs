//! Shared numeric helpers: compensated summation, lp norms with fast
//! half-integer powers, digit-pinned formatting, and a small ordered
//! fan-out used by the sweep-style operations.

/// Neumaier-compensated sum. Keeps grid means and long reductions near
/// machine precision regardless of term count.
pub fn comp_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// |x|^p for x >= 0 with fast paths for the half-integer exponents the
/// test matrix exercises. Falls back to `powf` for general p.
#[inline(always)]
pub fn pow_abs(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 3.0 {
        a * a * a
    } else if p == 1.5 {
        a * a.sqrt()
    } else if p == 4.0 {
        let s = a * a;
        s * s
    } else {
        a.powf(p)
    }
}

/// Unweighted lp norm of a vector, 1 <= p < inf.
#[inline]
pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        return v.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    v.iter().map(|&x| pow_abs(x, p)).sum::<f64>().powf(1.0 / p)
}

/// Sum of |v_i|^p without the final root; the monotone core of `lp_norm`.
#[inline(always)]
pub fn lp_pow_sum(v: &[f64], p: f64) -> f64 {
    v.iter().map(|&x| pow_abs(x, p)).sum::<f64>()
}

/// Weighted lp norm (sum_i w_i |v_i|^p)^(1/p); realizes L^p on a finite
/// atom space.
#[inline]
pub fn weighted_lp_norm(v: &[f64], weights: &[f64], p: f64) -> f64 {
    debug_assert_eq!(v.len(), weights.len());
    v.iter()
        .zip(weights)
        .map(|(&x, &w)| w * pow_abs(x, p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Decimal-notation formatting with a fixed number of significant digits.
/// Used by the CSV writers whose format pins 12 significant digits.
pub fn fmt_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return format!("{:.*}", digits.saturating_sub(1), 0.0);
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Ordered map over items with a capped worker count. Output order matches
/// input order, so results are identical for any worker count.
pub fn par_map<T, U, F>(items: &[T], workers: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers == 1 || items.len() < 2 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    let mut out: Vec<Option<U>> = Vec::with_capacity(items.len());
    out.resize_with(items.len(), || None);
    std::thread::scope(|scope| {
        let f = &f;
        let mut slots = out.as_mut_slice();
        let mut offset = 0usize;
        let mut handles = Vec::new();
        for piece in items.chunks(chunk) {
            let (head, rest) = slots.split_at_mut(piece.len());
            slots = rest;
            let start = offset;
            offset += piece.len();
            let _ = start;
            handles.push(scope.spawn(move || {
                for (slot, item) in head.iter_mut().zip(piece) {
                    *slot = Some(f(item));
                }
            }));
        }
        for h in handles {
            h.join().expect("worker panicked");
        }
    });
    out.into_iter().map(|v| v.expect("slot filled")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comp_sum_cancellation() {
        // 1 + 1e-16 repeated: naive summation loses the small terms.
        let mut values = vec![1.0];
        values.extend(std::iter::repeat(1e-16).take(10_000));
        let s = comp_sum(values.iter().copied());
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn pow_abs_matches_powf() {
        for &p in &[1.5, 2.0, 3.0, 4.0, 2.7] {
            for &x in &[-3.0, -0.5, 0.0, 0.25, 1.0, 7.5] {
                let got = pow_abs(x, p);
                let want = (x as f64).abs().powf(p);
                assert!(
                    (got - want).abs() <= 1e-14 * want.max(1.0),
                    "p={p} x={x}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn fmt_significant_pins_digits() {
        assert_eq!(fmt_significant(std::f64::consts::TAU, 12), "6.28318530718");
        assert_eq!(fmt_significant(2.0, 12), "2.00000000000");
        assert_eq!(fmt_significant(1.05, 12), "1.05000000000");
        assert_eq!(fmt_significant(0.0, 12), "0.00000000000");
        assert_eq!(fmt_significant(123.456, 6), "123.456");
    }

    #[test]
    fn par_map_order_is_input_order() {
        let items: Vec<u64> = (0..103).collect();
        let seq = par_map(&items, 1, |x| x * x);
        let par = par_map(&items, 7, |x| x * x);
        assert_eq!(seq, par);
    }
}
