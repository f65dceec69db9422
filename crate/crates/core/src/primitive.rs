//! Registry of the many-to-one scalar primitives and their analytic partial
//! derivatives up to order three.
//!
//! Every sweep in this crate reads derivatives from this one table, so the
//! closed forms here are cross-checked against finite differences and the
//! symbolic rules in the test suite.

/// Message-only domain failure; callers attach the offending tape node index.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainIssue(pub String);

fn issue(msg: impl Into<String>) -> DomainIssue {
    DomainIssue(msg.into())
}

/// A registered primitive operation. All are scalar many-to-one with
/// arity at most two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Primitive {
    Add,
    Sub,
    Neg,
    Mul,
    Div,
    Pow,
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl Primitive {
    pub fn name(self) -> &'static str {
        match self {
            Primitive::Add => "add",
            Primitive::Sub => "sub",
            Primitive::Neg => "neg",
            Primitive::Mul => "mul",
            Primitive::Div => "div",
            Primitive::Pow => "pow",
            Primitive::Sin => "sin",
            Primitive::Cos => "cos",
            Primitive::Tan => "tan",
            Primitive::Exp => "exp",
            Primitive::Log => "log",
            Primitive::Sqrt => "sqrt",
            Primitive::Tanh => "tanh",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Primitive::Add
            | Primitive::Sub
            | Primitive::Mul
            | Primitive::Div
            | Primitive::Pow => 2,
            _ => 1,
        }
    }

    /// Function-call names accepted by the expression grammar.
    pub fn from_call_name(name: &str) -> Option<Primitive> {
        Some(match name {
            "sin" => Primitive::Sin,
            "cos" => Primitive::Cos,
            "tan" => Primitive::Tan,
            "exp" => Primitive::Exp,
            "log" => Primitive::Log,
            "sqrt" => Primitive::Sqrt,
            "tanh" => Primitive::Tanh,
            "pow" => Primitive::Pow,
            _ => return None,
        })
    }

    pub fn eval(self, args: &[f64]) -> Result<f64, DomainIssue> {
        debug_assert_eq!(args.len(), self.arity());
        Ok(match self {
            Primitive::Add => args[0] + args[1],
            Primitive::Sub => args[0] - args[1],
            Primitive::Neg => -args[0],
            Primitive::Mul => args[0] * args[1],
            Primitive::Div => {
                if args[1] == 0.0 {
                    return Err(issue("division by zero"));
                }
                args[0] / args[1]
            }
            Primitive::Pow => {
                let (a, b) = (args[0], args[1]);
                if a > 0.0 {
                    a.powf(b)
                } else if a == 0.0 && b > 0.0 {
                    0.0
                } else if a < 0.0 && b.fract() == 0.0 {
                    a.powf(b)
                } else {
                    return Err(issue(format!("pow({a}, {b}) outside real domain")));
                }
            }
            Primitive::Sin => args[0].sin(),
            Primitive::Cos => args[0].cos(),
            Primitive::Tan => args[0].tan(),
            Primitive::Exp => args[0].exp(),
            Primitive::Log => {
                if args[0] <= 0.0 {
                    return Err(issue(format!("log of non-positive value {}", args[0])));
                }
                args[0].ln()
            }
            Primitive::Sqrt => {
                if args[0] < 0.0 {
                    return Err(issue(format!("sqrt of negative value {}", args[0])));
                }
                args[0].sqrt()
            }
            Primitive::Tanh => args[0].tanh(),
        })
    }

    /// Analytic partials at `args`, up to `order` (1..=3).
    pub fn partials(self, args: &[f64], order: u8) -> Result<PartialSet, DomainIssue> {
        debug_assert_eq!(args.len(), self.arity());
        debug_assert!((1..=3).contains(&order));
        let mut p = PartialSet::zeros(self.arity(), order);
        match self {
            Primitive::Add => {
                p.set_d1(0, 1.0);
                p.set_d1(1, 1.0);
            }
            Primitive::Sub => {
                p.set_d1(0, 1.0);
                p.set_d1(1, -1.0);
            }
            Primitive::Neg => {
                p.set_d1(0, -1.0);
            }
            Primitive::Mul => {
                let (a, b) = (args[0], args[1]);
                p.set_d1(0, b);
                p.set_d1(1, a);
                if order >= 2 {
                    p.set_d2(0, 1, 1.0);
                }
            }
            Primitive::Div => {
                let (a, b) = (args[0], args[1]);
                if b == 0.0 {
                    return Err(issue("division by zero"));
                }
                let ib = 1.0 / b;
                p.set_d1(0, ib);
                p.set_d1(1, -a * ib * ib);
                if order >= 2 {
                    p.set_d2(0, 1, -ib * ib);
                    p.set_d2(1, 1, 2.0 * a * ib * ib * ib);
                }
                if order >= 3 {
                    p.set_d3(0, 1, 1, 2.0 * ib * ib * ib);
                    p.set_d3(1, 1, 1, -6.0 * a * ib * ib * ib * ib);
                }
            }
            Primitive::Pow => {
                // a^b = exp(b log a); derivatives need a > 0.
                let (a, b) = (args[0], args[1]);
                if a <= 0.0 {
                    return Err(issue(format!(
                        "pow derivative requires positive base, got {a}"
                    )));
                }
                let f = a.powf(b);
                let la = a.ln();
                p.set_d1(0, b * a.powf(b - 1.0));
                p.set_d1(1, f * la);
                if order >= 2 {
                    p.set_d2(0, 0, b * (b - 1.0) * a.powf(b - 2.0));
                    p.set_d2(0, 1, a.powf(b - 1.0) * (1.0 + b * la));
                    p.set_d2(1, 1, f * la * la);
                }
                if order >= 3 {
                    p.set_d3(0, 0, 0, b * (b - 1.0) * (b - 2.0) * a.powf(b - 3.0));
                    p.set_d3(0, 0, 1, a.powf(b - 2.0) * (2.0 * b - 1.0 + b * (b - 1.0) * la));
                    p.set_d3(0, 1, 1, a.powf(b - 1.0) * la * (2.0 + b * la));
                    p.set_d3(1, 1, 1, f * la * la * la);
                }
            }
            Primitive::Sin => {
                let a = args[0];
                p.set_d1(0, a.cos());
                if order >= 2 {
                    p.set_d2(0, 0, -a.sin());
                }
                if order >= 3 {
                    p.set_d3(0, 0, 0, -a.cos());
                }
            }
            Primitive::Cos => {
                let a = args[0];
                p.set_d1(0, -a.sin());
                if order >= 2 {
                    p.set_d2(0, 0, -a.cos());
                }
                if order >= 3 {
                    p.set_d3(0, 0, 0, a.sin());
                }
            }
            Primitive::Tan => {
                let t = args[0].tan();
                let s = 1.0 + t * t;
                p.set_d1(0, s);
                if order >= 2 {
                    p.set_d2(0, 0, 2.0 * t * s);
                }
                if order >= 3 {
                    p.set_d3(0, 0, 0, s * (2.0 + 6.0 * t * t));
                }
            }
            Primitive::Exp => {
                let e = args[0].exp();
                p.set_d1(0, e);
                if order >= 2 {
                    p.set_d2(0, 0, e);
                }
                if order >= 3 {
                    p.set_d3(0, 0, 0, e);
                }
            }
            Primitive::Log => {
                let a = args[0];
                if a <= 0.0 {
                    return Err(issue(format!("log derivative at non-positive {a}")));
                }
                let ia = 1.0 / a;
                p.set_d1(0, ia);
                if order >= 2 {
                    p.set_d2(0, 0, -ia * ia);
                }
                if order >= 3 {
                    p.set_d3(0, 0, 0, 2.0 * ia * ia * ia);
                }
            }
            Primitive::Sqrt => {
                let a = args[0];
                if a <= 0.0 {
                    return Err(issue(format!("sqrt derivative at non-positive {a}")));
                }
                let r = a.sqrt();
                p.set_d1(0, 0.5 / r);
                if order >= 2 {
                    p.set_d2(0, 0, -0.25 / (r * a));
                }
                if order >= 3 {
                    p.set_d3(0, 0, 0, 0.375 / (r * a * a));
                }
            }
            Primitive::Tanh => {
                let t = args[0].tanh();
                let s = 1.0 - t * t;
                p.set_d1(0, s);
                if order >= 2 {
                    p.set_d2(0, 0, -2.0 * t * s);
                }
                if order >= 3 {
                    p.set_d3(0, 0, 0, s * (6.0 * t * t - 2.0));
                }
            }
        }
        Ok(p)
    }
}

/// Partial derivatives of one primitive at fixed argument values.
///
/// Storage is canonical: one slot per unordered index tuple, so every
/// symmetry of the mixed partials holds structurally. With arity capped at
/// two, fixed-size arrays cover every primitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialSet {
    arity: usize,
    order: u8,
    o1: [f64; 2],
    /// (0,0), (0,1), (1,1)
    o2: [f64; 3],
    /// (0,0,0), (0,0,1), (0,1,1), (1,1,1)
    o3: [f64; 4],
}

impl PartialSet {
    pub fn zeros(arity: usize, order: u8) -> Self {
        PartialSet {
            arity,
            order,
            o1: [0.0; 2],
            o2: [0.0; 3],
            o3: [0.0; 4],
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn d1(&self, i: usize) -> f64 {
        debug_assert!(i < self.arity);
        self.o1[i]
    }

    /// Symmetric accessor: indices in any order.
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.arity && j < self.arity);
        self.o2[i + j]
    }

    /// Totally symmetric accessor: indices in any order.
    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        debug_assert!(i < self.arity && j < self.arity && k < self.arity);
        self.o3[i + j + k]
    }

    fn set_d1(&mut self, i: usize, v: f64) {
        self.o1[i] = v;
    }

    fn set_d2(&mut self, i: usize, j: usize, v: f64) {
        self.o2[i + j] = v;
    }

    fn set_d3(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.o3[i + j + k] = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mul_partials_are_bilinear() {
        let p = Primitive::Mul.partials(&[2.0, 3.0], 3).unwrap();
        assert_eq!(p.d1(0), 3.0);
        assert_eq!(p.d1(1), 2.0);
        assert_eq!(p.d2(0, 0), 0.0);
        assert_eq!(p.d2(0, 1), 1.0);
        assert_eq!(p.d2(1, 0), 1.0);
        assert_eq!(p.d2(1, 1), 0.0);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(p.d3(i, j, k), 0.0);
                }
            }
        }
    }

    #[test]
    fn div_first_order_matches_hand_computed() {
        let p = Primitive::Div.partials(&[3.0, 6.0], 1).unwrap();
        assert_relative_eq!(p.d1(0), 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(p.d1(1), -1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn exp_partials_at_zero_are_one() {
        let p = Primitive::Exp.partials(&[0.0], 3).unwrap();
        assert_eq!(p.d1(0), 1.0);
        assert_eq!(p.d2(0, 0), 1.0);
        assert_eq!(p.d3(0, 0, 0), 1.0);
    }

    #[test]
    fn sqrt_derivative_at_zero_is_domain_error() {
        assert!(Primitive::Sqrt.partials(&[0.0], 1).is_err());
        assert!(Primitive::Sqrt.eval(&[0.0]).is_ok());
    }

    #[test]
    fn pow_handles_integer_exponents_on_negative_base() {
        assert_eq!(Primitive::Pow.eval(&[-2.0, 3.0]).unwrap(), -8.0);
        assert!(Primitive::Pow.eval(&[-2.0, 0.5]).is_err());
        assert!(Primitive::Pow.partials(&[-2.0, 3.0], 1).is_err());
    }

    /// Every closed form above against central finite differences of eval.
    #[test]
    fn partials_match_finite_differences_of_eval() {
        let prims = [
            Primitive::Add,
            Primitive::Sub,
            Primitive::Neg,
            Primitive::Mul,
            Primitive::Div,
            Primitive::Pow,
            Primitive::Sin,
            Primitive::Cos,
            Primitive::Tan,
            Primitive::Exp,
            Primitive::Log,
            Primitive::Sqrt,
            Primitive::Tanh,
        ];
        let points = [0.3, 0.7, 1.1, 1.9];
        for prim in prims {
            let k = prim.arity();
            let mut args = vec![0.0; k];
            let mut idx = vec![0usize; k];
            loop {
                for (a, &i) in args.iter_mut().zip(&idx) {
                    *a = points[i];
                }
                check_fd(prim, &args);
                // next tuple
                let mut c = 0;
                while c < k {
                    idx[c] += 1;
                    if idx[c] < points.len() {
                        break;
                    }
                    idx[c] = 0;
                    c += 1;
                }
                if c == k {
                    break;
                }
            }
        }
    }

    fn check_fd(prim: Primitive, args: &[f64]) {
        let p = prim.partials(args, 3).unwrap();
        let k = prim.arity();
        let f = |a: &[f64]| prim.eval(a).unwrap();
        for i in 0..k {
            let h = 1e-6;
            let mut hi = args.to_vec();
            let mut lo = args.to_vec();
            hi[i] += h;
            lo[i] -= h;
            let fd = (f(&hi) - f(&lo)) / (2.0 * h);
            let gap = (fd - p.d1(i)).abs() / (1.0 + p.d1(i).abs());
            assert!(gap < 1e-7, "{} d1({i}) at {args:?}: {fd} vs {}", prim.name(), p.d1(i));
            for j in 0..k {
                let h = 1e-5;
                let fd2 = second_diff(&f, args, i, j, h);
                let gap = (fd2 - p.d2(i, j)).abs() / (1.0 + p.d2(i, j).abs());
                assert!(gap < 1e-5, "{} d2({i},{j}) at {args:?}: {fd2} vs {}", prim.name(), p.d2(i, j));
                for m in 0..k {
                    let h = 1e-3;
                    let fd3 = third_diff(&f, args, i, j, m, h);
                    let gap = (fd3 - p.d3(i, j, m)).abs() / (1.0 + p.d3(i, j, m).abs());
                    assert!(
                        gap < 1e-3,
                        "{} d3({i},{j},{m}) at {args:?}: {fd3} vs {}",
                        prim.name(),
                        p.d3(i, j, m)
                    );
                }
            }
        }
    }

    fn second_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, j: usize, h: f64) -> f64 {
        let g = |x: &[f64]| {
            let mut hi = x.to_vec();
            let mut lo = x.to_vec();
            hi[i] += h;
            lo[i] -= h;
            (f(&hi) - f(&lo)) / (2.0 * h)
        };
        let mut hi = x.to_vec();
        let mut lo = x.to_vec();
        hi[j] += h;
        lo[j] -= h;
        (g(&hi) - g(&lo)) / (2.0 * h)
    }

    fn third_diff(
        f: &dyn Fn(&[f64]) -> f64,
        x: &[f64],
        i: usize,
        j: usize,
        k: usize,
        h: f64,
    ) -> f64 {
        let g = |x: &[f64]| second_diff(f, x, i, j, h);
        let mut hi = x.to_vec();
        let mut lo = x.to_vec();
        hi[k] += h;
        lo[k] -= h;
        (g(&hi) - g(&lo)) / (2.0 * h)
    }
}
