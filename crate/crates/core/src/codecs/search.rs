use crate::scalar::Scalar;

/// Golden-section minimization of `f` on `[a, b]` until the bracket is shorter than `tol`.
///
/// Returns `(argmin, min)`. Assumes `f` is unimodal on the bracket; otherwise it
/// converges to some local minimum inside it.
pub fn golden_section_min<T, F>(mut f: F, mut a: T, mut b: T, tol: T) -> (T, T)
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let inv_phi = (T::of(5.0).sqrt() - T::one()) / T::of(2.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
        // f32 brackets can stall above tol near large |x|.
        if x1 >= x2 {
            break;
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_minimum() {
        let (x, fx) = golden_section_min(|x: f64| (x - 0.3).powi(2), -1.0, 2.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx < 1e-16);
        // an offset limits resolution to about sqrt(eps)
        let (x, _) = golden_section_min(|x: f64| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-7);
    }

    #[test]
    fn handles_boundary_minimum() {
        let (x, _) = golden_section_min(|x: f64| x, 0.0, 1.0, 1e-7);
        assert!(x < 1e-6);
    }

    #[test]
    fn terminates_in_f32() {
        let (x, _) = golden_section_min(|x: f32| (x - 7.9).powi(2), 7.8, 8.0, 1e-9);
        assert!((x - 7.9).abs() < 1e-5);
    }
}
