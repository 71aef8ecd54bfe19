use crate::error::{invalid, Error, Result};
use crate::optim::TraceRecord;
use crate::rng::RngStream;

/// The box `[lo, hi]^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    pub d: usize,
    pub lo: f64,
    pub hi: f64,
}

/// `sqrt(sum (predict - exact)^2 / sum exact^2)` over `n_mc` uniform points
/// of the box.
pub fn relative_l2_error(
    predict: impl Fn(&[f64]) -> f64,
    exact: impl Fn(&[f64]) -> f64,
    domain: BoxDomain,
    n_mc: usize,
    stream: &mut RngStream,
) -> Result<f64> {
    if n_mc == 0 {
        return invalid("n_mc must be at least 1");
    }
    if domain.d == 0 || !(domain.lo < domain.hi) {
        return invalid("evaluation box must be nonempty");
    }
    let mut x = vec![0.0; domain.d];
    let (mut num, mut den) = (0.0, 0.0);
    for _ in 0..n_mc {
        stream.fill_uniform(domain.lo, domain.hi, &mut x);
        let e = exact(&x);
        let p = predict(&x);
        num += (p - e) * (p - e);
        den += e * e;
    }
    if den == 0.0 {
        return Err(Error::NumericFailure("exact solution vanishes on every sample".into()));
    }
    Ok((num / den).sqrt())
}

/// First step whose recorded test loss is at or below `target`.
pub fn steps_to_reach(trace: &[TraceRecord], target: f64) -> Option<u64> {
    trace
        .iter()
        .find(|r| r.test_loss.is_some_and(|l| l <= target))
        .map(|r| r.step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{tag, StreamId};

    fn s() -> RngStream {
        RngStream::new(1, StreamId::new(tag::EVAL, 0, 0))
    }

    #[test]
    fn examples() {
        let dom = BoxDomain { d: 3, lo: -1.0, hi: 1.0 };
        let f = |x: &[f64]| 2.0 + x[0];
        assert_eq!(relative_l2_error(f, f, dom, 100, &mut s()).unwrap(), 0.0);
        assert_eq!(relative_l2_error(|_| 0.0, |_| 3.0, dom, 100, &mut s()).unwrap(), 1.0);
        let e = relative_l2_error(|x| 1.01 * f(x), f, dom, 100, &mut s()).unwrap();
        assert!((e - 0.01).abs() < 1e-12);
        let e2 = relative_l2_error(|x| 2.0 * 1.01 * f(x), |x| 2.0 * f(x), dom, 100, &mut s()).unwrap();
        assert!((e - e2).abs() < 1e-12);
        assert!(relative_l2_error(|_| 1.0, |_| 0.0, dom, 100, &mut s()).is_err());
        assert!(relative_l2_error(f, f, dom, 0, &mut s()).is_err());
    }
}
