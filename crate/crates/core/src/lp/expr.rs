use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Handle of a variable inside one [`ModelIR`](super::ModelIR).
///
/// Handles are dense indices into the variable table and stay valid for the
/// lifetime of the model (variables are never removed).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Sparse affine expression `sum(coeff * var) + constant`.
///
/// Terms are kept sorted by variable so iteration order (and therefore every
/// model built from expressions) is deterministic. Coefficients that cancel to
/// exactly zero are dropped on insert.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    terms: BTreeMap<VarId, f64>,
    constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        LinExpr {
            terms: BTreeMap::new(),
            constant: value,
        }
    }

    pub fn term(var: VarId, coeff: f64) -> Self {
        let mut expr = LinExpr::new();
        expr.add_term(var, coeff);
        expr
    }

    /// Sum of `vars`, each with coefficient one.
    pub fn sum<I: IntoIterator<Item = VarId>>(vars: I) -> Self {
        let mut expr = LinExpr::new();
        for v in vars {
            expr.add_term(v, 1.0);
        }
        expr
    }

    /// Adds `coeff * var`, merging with an existing term for the same variable.
    pub fn add_term(&mut self, var: VarId, coeff: f64) -> &mut Self {
        if coeff == 0.0 {
            return self;
        }
        let entry = self.terms.entry(var).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.remove(&var);
        }
        self
    }

    pub fn with_term(mut self, var: VarId, coeff: f64) -> Self {
        self.add_term(var, coeff);
        self
    }

    pub fn add_constant(&mut self, value: f64) -> &mut Self {
        self.constant += value;
        self
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        for (&v, &c) in &other.terms {
            self.add_term(v, c * scale);
        }
        self.constant += other.constant * scale;
        self
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    pub fn coeff(&self, var: VarId) -> f64 {
        self.terms.get(&var).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarId, f64)> + '_ {
        self.terms.iter().map(|(&v, &c)| (v, c))
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.terms.values().all(|c| c.is_finite())
    }

    /// Keeps only the terms whose variable satisfies `keep`; the constant is
    /// retained.
    pub fn filter_vars(&self, mut keep: impl FnMut(VarId) -> bool) -> LinExpr {
        LinExpr {
            terms: self
                .terms
                .iter()
                .filter(|(v, _)| keep(**v))
                .map(|(&v, &c)| (v, c))
                .collect(),
            constant: self.constant,
        }
    }

    /// Evaluates the expression with values looked up by `value_of`.
    pub fn eval_with(&self, mut value_of: impl FnMut(VarId) -> Option<f64>) -> Option<f64> {
        let mut acc = self.constant;
        for (&v, &c) in &self.terms {
            acc += c * value_of(v)?;
        }
        Some(acc)
    }

    /// Evaluates against a dense value vector indexed by [`VarId::index`].
    pub fn eval_dense(&self, values: &[f64]) -> Option<f64> {
        self.eval_with(|v| values.get(v.0).copied())
    }
}

impl From<VarId> for LinExpr {
    fn from(var: VarId) -> Self {
        LinExpr::term(var, 1.0)
    }
}

impl From<f64> for LinExpr {
    fn from(value: f64) -> Self {
        LinExpr::constant(value)
    }
}

impl AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: &LinExpr) {
        self.add_expr(rhs, 1.0);
    }
}

impl SubAssign<&LinExpr> for LinExpr {
    fn sub_assign(&mut self, rhs: &LinExpr) {
        self.add_expr(rhs, -1.0);
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self += &rhs;
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self -= &rhs;
        self
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        let mut out = LinExpr::new();
        out.add_expr(&self, rhs);
        out
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in self.terms() {
            if first {
                write!(f, "{c} x{}", v.0)?;
                first = false;
            } else if c < 0.0 {
                write!(f, " - {} x{}", -c, v.0)?;
            } else {
                write!(f, " + {c} x{}", v.0)?;
            }
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant != 0.0 {
            write!(f, " + {}", self.constant)
        } else {
            Ok(())
        }
    }
}
