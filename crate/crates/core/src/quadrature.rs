//! Adaptive Simpson integration.

/// Maximum number of panels the integrator may create.
pub const MAX_PANELS: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            abs_tol: 1e-9,
            max_panels: MAX_PANELS,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

impl Quadrature {
    /// Integrates `f` over `[a, b]`. The tolerance is split between halves on
    /// each refinement; once the panel budget is spent the remaining panels
    /// are accepted with their Richardson-corrected estimate.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        let mut stack = vec![Panel {
            a,
            b,
            fa,
            fm,
            fb,
            whole: simpson(a, b, fa, fm, fb),
            tol: self.abs_tol,
            depth: 0,
        }];
        let mut panels = 1usize;
        let mut total = 0.0;
        while let Some(p) = stack.pop() {
            let m = 0.5 * (p.a + p.b);
            let lm = 0.5 * (p.a + m);
            let rm = 0.5 * (m + p.b);
            let (flm, frm) = (f(lm), f(rm));
            let left = simpson(p.a, m, p.fa, flm, p.fm);
            let right = simpson(m, p.b, p.fm, frm, p.fb);
            let delta = left + right - p.whole;
            let converged = delta.abs() <= 15.0 * p.tol;
            if converged || p.depth >= 60 || panels >= self.max_panels || m <= p.a || m >= p.b {
                total += left + right + delta / 15.0;
                continue;
            }
            panels += 1;
            stack.push(Panel {
                a: p.a,
                b: m,
                fa: p.fa,
                fm: flm,
                fb: p.fm,
                whole: left,
                tol: 0.5 * p.tol,
                depth: p.depth + 1,
            });
            stack.push(Panel {
                a: m,
                b: p.b,
                fa: p.fm,
                fm: frm,
                fb: p.fb,
                whole: right,
                tol: 0.5 * p.tol,
                depth: p.depth + 1,
            });
        }
        total
    }

    /// Integrates piece by piece so that every entry of `cuts` inside
    /// `(a, b)` lands on a panel boundary.
    pub fn integrate_with_cuts<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, cuts: &[f64]) -> f64 {
        let mut knots: Vec<f64> = cuts.iter().copied().filter(|&c| c > a && c < b).collect();
        knots.sort_by(|x, y| x.total_cmp(y));
        let pieces = knots.len() + 1;
        let per_piece = Quadrature {
            abs_tol: self.abs_tol / pieces as f64,
            max_panels: self.max_panels / pieces,
        };
        let mut lo = a;
        let mut sum = 0.0;
        for hi in knots.into_iter().chain(std::iter::once(b)) {
            sum += per_piece.integrate(&f, lo, hi);
            lo = hi;
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let q = Quadrature::default();
        let v = q.integrate(|x| 3.0 * x * x + 1.0, 0.0, 2.0);
        assert!((v - 10.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_singularity_at_left_end() {
        let q = Quadrature::default();
        let v = q.integrate(|x: f64| x.sqrt(), 0.0, 1.0);
        assert!((v - 2.0 / 3.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn kinks_on_cut_points() {
        let q = Quadrature::default();
        let f = |x: f64| if x < 0.3 { 1.0 } else { 5.0 };
        let v = q.integrate_with_cuts(f, 0.0, 1.0, &[0.3]);
        assert!((v - (0.3 + 3.5)).abs() < 1e-12);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(Quadrature::default().integrate(|x| x, 1.0, 1.0), 0.0);
    }
}
