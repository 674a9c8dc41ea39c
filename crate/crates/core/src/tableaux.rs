//! Butcher tableaux: the method registry, order-condition checks, and
//! stability-polynomial coefficients.
//!
//! Coefficients are stored as double precision values derived from the exact
//! rationals of the published methods (rationals kept in comments next to the
//! values); irrational entries (the SDIRK diagonals) are written to 17
//! significant digits.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableauKind {
    Explicit,
    DiagonallyImplicit,
}

/// A Runge-Kutta method given by its coefficients (A, b, c), the declared
/// classical order, and whether the stage matrix is strictly or merely lower
/// triangular.
#[derive(Debug, Clone)]
pub struct ButcherTableau {
    pub name: &'static str,
    pub s: usize,
    /// Row-major s*s stage matrix.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub declared_order: usize,
    pub kind: TableauKind,
}

impl ButcherTableau {
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.s + j]
    }

    pub fn is_explicit(&self) -> bool {
        self.kind == TableauKind::Explicit
    }

    /// Structural invariants: triangularity per kind, sum(b) = 1, and the
    /// row-sum convention c_i = sum_j a_ij.
    pub fn validate(&self) -> Result<()> {
        let s = self.s;
        if self.a.len() != s * s || self.b.len() != s || self.c.len() != s {
            return Err(Error::PreconditionViolated(format!(
                "tableau `{}` has inconsistent dimensions",
                self.name
            )));
        }
        let mut nonzero_diag = false;
        for i in 0..s {
            for j in 0..s {
                let v = self.a(i, j);
                let strict = match self.kind {
                    TableauKind::Explicit => j >= i,
                    TableauKind::DiagonallyImplicit => j > i,
                };
                if strict && v != 0.0 {
                    return Err(Error::PreconditionViolated(format!(
                        "tableau `{}` is not lower triangular at ({i}, {j})",
                        self.name
                    )));
                }
            }
            if self.a(i, i) != 0.0 {
                nonzero_diag = true;
            }
        }
        if self.kind == TableauKind::DiagonallyImplicit && !nonzero_diag {
            return Err(Error::PreconditionViolated(format!(
                "tableau `{}` declared DIRK but has a zero diagonal",
                self.name
            )));
        }
        let bsum: f64 = self.b.iter().sum();
        if (bsum - 1.0).abs() > 1e-14 {
            return Err(Error::PreconditionViolated(format!(
                "tableau `{}` weights sum to {bsum}, not 1",
                self.name
            )));
        }
        for i in 0..s {
            let row: f64 = (0..s).map(|j| self.a(i, j)).sum();
            if (row - self.c[i]).abs() > 1e-14 {
                return Err(Error::PreconditionViolated(format!(
                    "tableau `{}` violates the row-sum convention at stage {i}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Residuals of all Butcher order conditions through order `up_to`
    /// (capped at 4; higher orders are certified by convergence tests).
    pub fn check_order_conditions(&self, up_to: usize) -> Vec<(&'static str, f64)> {
        assert!((1..=4).contains(&up_to), "order conditions capped at 4");
        let s = self.s;
        let b = &self.b;
        let c = &self.c;
        let ac: Vec<f64> = (0..s)
            .map(|i| (0..s).map(|j| self.a(i, j) * c[j]).sum())
            .collect();
        let ac2: Vec<f64> = (0..s)
            .map(|i| (0..s).map(|j| self.a(i, j) * c[j] * c[j]).sum())
            .collect();
        let aac: Vec<f64> = (0..s)
            .map(|i| (0..s).map(|j| self.a(i, j) * ac[j]).sum())
            .collect();
        let dot = |w: &dyn Fn(usize) -> f64| -> f64 { (0..s).map(|i| b[i] * w(i)).sum() };

        let mut out: Vec<(&'static str, f64)> = Vec::new();
        out.push(("order1: b.1 = 1", dot(&|_| 1.0) - 1.0));
        if up_to >= 2 {
            out.push(("order2: b.c = 1/2", dot(&|i| c[i]) - 0.5));
        }
        if up_to >= 3 {
            out.push(("order3: b.c^2 = 1/3", dot(&|i| c[i] * c[i]) - 1.0 / 3.0));
            out.push(("order3: b.Ac = 1/6", dot(&|i| ac[i]) - 1.0 / 6.0));
        }
        if up_to >= 4 {
            out.push(("order4: b.c^3 = 1/4", dot(&|i| c[i].powi(3)) - 0.25));
            out.push(("order4: (b*c).Ac = 1/8", dot(&|i| c[i] * ac[i]) - 0.125));
            out.push(("order4: b.Ac^2 = 1/12", dot(&|i| ac2[i]) - 1.0 / 12.0));
            out.push(("order4: b.AAc = 1/24", dot(&|i| aac[i]) - 1.0 / 24.0));
        }
        out
    }

    /// Monomial coefficients alpha_k = b^T A^{k-1} 1 of the stability
    /// polynomial R(z) = 1 + sum_k alpha_k z^k. For a p-th order method
    /// alpha_k = 1/k! for k <= p. Explicit tableaux only.
    pub fn stability_monomial_coefficients(&self) -> Result<Vec<f64>> {
        if !self.is_explicit() {
            return Err(Error::NotExplicit(self.name.to_string()));
        }
        let s = self.s;
        let mut v = vec![1.0; s];
        let mut alpha = Vec::with_capacity(s);
        for _ in 0..s {
            alpha.push((0..s).map(|i| self.b[i] * v[i]).sum());
            let next: Vec<f64> = (0..s)
                .map(|i| (0..s).map(|j| self.a(i, j) * v[j]).sum())
                .collect();
            v = next;
        }
        Ok(alpha)
    }
}

/// Names of all registered methods, as exposed on the command line.
pub const METHOD_NAMES: [&str; 10] = [
    "rk44", "ssprk22", "ssprk33", "heun3", "fehlberg4", "dp75", "bs85", "norsett23", "sdirk34",
    "sdirk54",
];

/// Look up a method by its registry name. The registry is immutable: each
/// call constructs the same published tableau.
pub fn registry_get(name: &str) -> Result<ButcherTableau> {
    let t = match name {
        "ssprk22" => explicit(
            "ssprk22",
            2,
            vec![
                0.0, 0.0, //
                1.0, 0.0,
            ],
            vec![0.5, 0.5], // 1/2, 1/2
            2,
        ),
        "ssprk33" => explicit(
            "ssprk33",
            3,
            vec![
                0.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, //
                0.25, 0.25, 0.0, // 1/4, 1/4
            ],
            vec![1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
            3,
        ),
        "heun3" => explicit(
            "heun3",
            3,
            vec![
                0.0,
                0.0,
                0.0, //
                1.0 / 3.0,
                0.0,
                0.0, //
                0.0,
                2.0 / 3.0,
                0.0,
            ],
            vec![0.25, 0.0, 0.75], // 1/4, 0, 3/4
            3,
        ),
        "rk44" => explicit(
            "rk44",
            4,
            vec![
                0.0, 0.0, 0.0, 0.0, //
                0.5, 0.0, 0.0, 0.0, //
                0.0, 0.5, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
            vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            4,
        ),
        // 5-stage, order-4 propagation formula of the Fehlberg 4(5) pair.
        "fehlberg4" => explicit(
            "fehlberg4",
            5,
            vec![
                0.0,
                0.0,
                0.0,
                0.0,
                0.0, //
                0.25, // 1/4
                0.0,
                0.0,
                0.0,
                0.0, //
                3.0 / 32.0,
                9.0 / 32.0,
                0.0,
                0.0,
                0.0, //
                1932.0 / 2197.0,
                -7200.0 / 2197.0,
                7296.0 / 2197.0,
                0.0,
                0.0, //
                439.0 / 216.0,
                -8.0,
                3680.0 / 513.0,
                -845.0 / 4104.0,
                0.0,
            ],
            vec![
                25.0 / 216.0,
                0.0,
                1408.0 / 2565.0,
                2197.0 / 4104.0,
                -0.2, // -1/5
            ],
            4,
        ),
        // Dormand-Prince 5(4), 7 stages (FSAL), order 5.
        "dp75" => explicit(
            "dp75",
            7,
            vec![
                0.0,
                0.0,
                0.0,
                0.0,
                0.0,
                0.0,
                0.0, //
                0.2, // 1/5
                0.0,
                0.0,
                0.0,
                0.0,
                0.0,
                0.0, //
                3.0 / 40.0,
                9.0 / 40.0,
                0.0,
                0.0,
                0.0,
                0.0,
                0.0, //
                44.0 / 45.0,
                -56.0 / 15.0,
                32.0 / 9.0,
                0.0,
                0.0,
                0.0,
                0.0, //
                19372.0 / 6561.0,
                -25360.0 / 2187.0,
                64448.0 / 6561.0,
                -212.0 / 729.0,
                0.0,
                0.0,
                0.0, //
                9017.0 / 3168.0,
                -355.0 / 33.0,
                46732.0 / 5247.0,
                49.0 / 176.0,
                -5103.0 / 18656.0,
                0.0,
                0.0, //
                35.0 / 384.0,
                0.0,
                500.0 / 1113.0,
                125.0 / 192.0,
                -2187.0 / 6784.0,
                11.0 / 84.0,
                0.0,
            ],
            vec![
                35.0 / 384.0,
                0.0,
                500.0 / 1113.0,
                125.0 / 192.0,
                -2187.0 / 6784.0,
                11.0 / 84.0,
                0.0,
            ],
            5,
        ),
        // Bogacki-Shampine 5th-order formula of the (4,5) pair, 8 stages (FSAL).
        "bs85" => explicit(
            "bs85",
            8,
            vec![
                0.0,
                0.0,
                0.0,
                0.0,
                0.0,
                0.0,
                0.0,
                0.0, //
                1.0 / 6.0,
                0.0,
                0.0,
                0.0,
                0.0,
                0.0,
                0.0,
                0.0, //
                2.0 / 27.0,
                4.0 / 27.0,
                0.0,
                0.0,
                0.0,
                0.0,
                0.0,
                0.0, //
                183.0 / 1372.0,
                -162.0 / 343.0,
                1053.0 / 1372.0,
                0.0,
                0.0,
                0.0,
                0.0,
                0.0, //
                68.0 / 297.0,
                -4.0 / 11.0,
                42.0 / 143.0,
                1960.0 / 3861.0,
                0.0,
                0.0,
                0.0,
                0.0, //
                597.0 / 22528.0,
                81.0 / 352.0,
                63099.0 / 585728.0,
                58653.0 / 366080.0,
                4617.0 / 20480.0,
                0.0,
                0.0,
                0.0, //
                174197.0 / 959244.0,
                -30942.0 / 79937.0,
                8152137.0 / 19744439.0,
                666106.0 / 1039181.0,
                -29421.0 / 29068.0,
                482048.0 / 414219.0,
                0.0,
                0.0, //
                587.0 / 8064.0,
                0.0,
                4440339.0 / 15491840.0,
                24353.0 / 124800.0,
                387.0 / 44800.0,
                2152.0 / 5985.0,
                7267.0 / 94080.0,
                0.0,
            ],
            vec![
                587.0 / 8064.0,
                0.0,
                4440339.0 / 15491840.0,
                24353.0 / 124800.0,
                387.0 / 44800.0,
                2152.0 / 5985.0,
                7267.0 / 94080.0,
                0.0,
            ],
            5,
        ),
        // Norsett two-stage SDIRK of order 3, A-stable branch
        // gamma = (3 + sqrt(3))/6.
        "norsett23" => {
            const G: f64 = 0.788_675_134_594_812_9;
            dirk(
                "norsett23",
                2,
                vec![
                    G,
                    0.0, //
                    1.0 - 2.0 * G,
                    G,
                ],
                vec![0.5, 0.5],
                3,
            )
        }
        // Three-stage SDIRK of order 4 (Crouzeix), gamma = 1/2 + cos(pi/18)/sqrt(3),
        // b = (delta, 1 - 2*delta, delta) with delta = 1/(6*(2*gamma - 1)^2).
        "sdirk34" => {
            const G: f64 = 1.068_579_021_301_628_8;
            const D: f64 = 0.128_886_400_515_720_42;
            dirk(
                "sdirk34",
                3,
                vec![
                    G,
                    0.0,
                    0.0, //
                    0.5 - G,
                    G,
                    0.0, //
                    2.0 * G,
                    1.0 - 4.0 * G,
                    G,
                ],
                vec![D, 1.0 - 2.0 * D, D],
                4,
            )
        }
        // Five-stage, order-4, L-stable, stiffly accurate SDIRK with
        // gamma = 1/4.
        "sdirk54" => dirk(
            "sdirk54",
            5,
            vec![
                0.25,
                0.0,
                0.0,
                0.0,
                0.0, //
                0.5,
                0.25,
                0.0,
                0.0,
                0.0, //
                17.0 / 50.0,
                -1.0 / 25.0,
                0.25,
                0.0,
                0.0, //
                371.0 / 1360.0,
                -137.0 / 2720.0,
                15.0 / 544.0,
                0.25,
                0.0, //
                25.0 / 24.0,
                -49.0 / 48.0,
                125.0 / 16.0,
                -85.0 / 12.0,
                0.25,
            ],
            vec![25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25],
            4,
        ),
        other => return Err(Error::UnknownMethod(other.to_string())),
    };
    debug_assert!(t.validate().is_ok(), "registry tableau failed validation");
    Ok(t)
}

fn explicit(name: &'static str, s: usize, a: Vec<f64>, b: Vec<f64>, order: usize) -> ButcherTableau {
    with_row_sums(name, s, a, b, order, TableauKind::Explicit)
}

fn dirk(name: &'static str, s: usize, a: Vec<f64>, b: Vec<f64>, order: usize) -> ButcherTableau {
    with_row_sums(name, s, a, b, order, TableauKind::DiagonallyImplicit)
}

fn with_row_sums(
    name: &'static str,
    s: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    declared_order: usize,
    kind: TableauKind,
) -> ButcherTableau {
    let c: Vec<f64> = (0..s).map(|i| a[i * s..(i + 1) * s].iter().sum()).collect();
    ButcherTableau {
        name,
        s,
        a,
        b,
        c,
        declared_order,
        kind,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete_and_valid() {
        for name in METHOD_NAMES {
            let t = registry_get(name).unwrap();
            assert_eq!(t.name, name);
            t.validate().unwrap();
            // order conditions hold through min(p, 4)
            let up_to = t.declared_order.min(4);
            for (id, res) in t.check_order_conditions(up_to) {
                assert!(
                    res.abs() <= 1e-12,
                    "{name}: condition {id} residual {res:e}"
                );
            }
        }
    }

    #[test]
    fn unknown_method_is_rejected() {
        assert!(matches!(
            registry_get("rk5"),
            Err(Error::UnknownMethod(_))
        ));
    }

    #[test]
    fn registry_get_is_deterministic() {
        let a = registry_get("bs85").unwrap();
        let b = registry_get("bs85").unwrap();
        assert_eq!(a.a, b.a);
        assert_eq!(a.b, b.b);
        assert_eq!(a.c, b.c);
    }

    #[test]
    fn rk44_matches_published_weights() {
        let t = registry_get("rk44").unwrap();
        assert_eq!(t.b, vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]);
        assert_eq!(t.declared_order, 4);
        assert_eq!(t.kind, TableauKind::Explicit);
    }

    #[test]
    fn ssprk33_shape() {
        let t = registry_get("ssprk33").unwrap();
        assert_eq!(t.s, 3);
        assert_eq!(t.declared_order, 3);
        assert_eq!(t.c, vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn norsett23_is_dirk_of_order_3() {
        let t = registry_get("norsett23").unwrap();
        assert_eq!(t.kind, TableauKind::DiagonallyImplicit);
        assert_eq!(t.s, 2);
        assert_eq!(t.declared_order, 3);
        for (id, res) in t.check_order_conditions(3) {
            assert!(res.abs() <= 1e-12, "{id}: {res:e}");
        }
    }

    #[test]
    fn ssprk22_violates_order_3() {
        // sum b_i c_i^2 = 1/2 for b = (1/2, 1/2), c = (0, 1): residual 1/6
        // against 1/3... evaluated by hand: 1/2*0 + 1/2*1 = 1/2, 1/2 - 1/3 = 1/6.
        let t = registry_get("ssprk22").unwrap();
        let conds = t.check_order_conditions(3);
        let bc2 = conds
            .iter()
            .find(|(id, _)| id.starts_with("order3: b.c^2"))
            .unwrap();
        assert!((bc2.1 - 1.0 / 6.0).abs() < 1e-15);
        // order-2 conditions are exact
        for (id, res) in t.check_order_conditions(2) {
            assert!(res.abs() <= 1e-15, "{id}: {res:e}");
        }
    }

    #[test]
    fn heun3_order_3_exact() {
        let t = registry_get("heun3").unwrap();
        for (id, res) in t.check_order_conditions(3) {
            assert!(res.abs() <= 1e-15, "{id}: {res:e}");
        }
    }

    #[test]
    fn stability_coefficients_match_factorials() {
        // alpha_k = 1/k! for k <= p, to 1e-14
        for name in METHOD_NAMES {
            let t = registry_get(name).unwrap();
            if !t.is_explicit() {
                continue;
            }
            let alpha = t.stability_monomial_coefficients().unwrap();
            let mut fact = 1.0;
            for k in 1..=t.declared_order.min(t.s) {
                fact *= k as f64;
                assert!(
                    (alpha[k - 1] - 1.0 / fact).abs() <= 1e-14,
                    "{name}: alpha_{k} = {} != 1/{k}!",
                    alpha[k - 1]
                );
            }
        }
    }

    #[test]
    fn rk44_stability_coefficients() {
        let alpha = registry_get("rk44")
            .unwrap()
            .stability_monomial_coefficients()
            .unwrap();
        let expect = [1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0];
        for (a, e) in alpha.iter().zip(expect.iter()) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn ssprk22_stability_coefficients() {
        let alpha = registry_get("ssprk22")
            .unwrap()
            .stability_monomial_coefficients()
            .unwrap();
        assert_eq!(alpha.len(), 2);
        assert!((alpha[0] - 1.0).abs() < 1e-15);
        assert!((alpha[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bs85_stability_tail_matches_rational_oracle() {
        // Exact-rational evaluation of b^T A^{k-1} 1 (computed once with
        // arbitrary-precision rationals and frozen here):
        //   alpha_6 = 17291/12418560, alpha_7 = 269/1379840, alpha_8 = 0.
        let alpha = registry_get("bs85")
            .unwrap()
            .stability_monomial_coefficients()
            .unwrap();
        let expect = [
            1.0,
            0.5,
            1.0 / 6.0,
            1.0 / 24.0,
            1.0 / 120.0,
            0.001_392_351_448_155_019_6, // 17291/12418560
            0.000_194_950_139_146_567_72, // 269/1379840
            0.0,
        ];
        for (k, (a, e)) in alpha.iter().zip(expect.iter()).enumerate() {
            assert!((a - e).abs() <= 1e-14, "alpha_{}: {a} vs {e}", k + 1);
        }
    }

    #[test]
    fn fehlberg4_fifth_coefficient() {
        // b^T A^4 1 = 1/104 in exact rationals for the 5-stage order-4 formula.
        let alpha = registry_get("fehlberg4")
            .unwrap()
            .stability_monomial_coefficients()
            .unwrap();
        assert!((alpha[4] - 1.0 / 104.0).abs() < 1e-15);
    }

    #[test]
    fn dirk_has_no_stability_monomials() {
        assert!(matches!(
            registry_get("sdirk54")
                .unwrap()
                .stability_monomial_coefficients(),
            Err(Error::NotExplicit(_))
        ));
    }
}
