//! A small exact simplex solver over rationals.
//!
//! Sparse tableau, two phases. Pivoting uses the largest reduced cost and
//! falls back to Bland's rule after a run of degenerate pivots, which rules
//! out cycling. Arithmetic first runs on overflow-checked `i128` ratios and
//! restarts on big integers if any intermediate value overflows.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
}

#[derive(Debug, Clone)]
struct Constraint {
    coeffs: Vec<(usize, BigRational)>,
    rel: Relation,
    rhs: BigRational,
}

/// `maximize c·x` subject to linear rows and `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    vars: usize,
    rows: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<BigRational>,
    pub objective: BigRational,
}

impl LinearProgram {
    pub fn new(vars: usize) -> LinearProgram {
        LinearProgram { vars, rows: Vec::new() }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, BigRational)>, rel: Relation, rhs: BigRational) {
        assert!(coeffs.iter().all(|(j, _)| *j < self.vars), "column out of range");
        let mut coeffs = coeffs;
        coeffs.sort_by_key(|(j, _)| *j);
        coeffs.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1.clone();
                true
            } else {
                false
            }
        });
        coeffs.retain(|(_, c)| !Zero::is_zero(c));
        self.rows.push(Constraint { coeffs, rel, rhs });
    }

    /// Maximizes `objective`.
    pub fn maximize(&self, objective: &[(usize, BigRational)]) -> Result<LpSolution, LpError> {
        self.maximize_then(objective, None)
    }

    /// Maximizes `primary`, then maximizes `secondary` over the optimal face of `primary`.
    pub fn maximize_then(
        &self,
        primary: &[(usize, BigRational)],
        secondary: Option<&[(usize, BigRational)]>,
    ) -> Result<LpSolution, LpError> {
        match solve::<Ratio<i128>>(self, primary, secondary) {
            Ok(s) => Ok(s),
            Err(Fail::Overflow) => match solve::<BigRational>(self, primary, secondary) {
                Ok(s) => Ok(s),
                Err(Fail::Lp(e)) => Err(e),
                Err(Fail::Overflow) => unreachable!("big rationals do not overflow"),
            },
            Err(Fail::Lp(e)) => Err(e),
        }
    }
}

#[derive(Debug)]
enum Fail {
    Lp(LpError),
    Overflow,
}

impl From<LpError> for Fail {
    fn from(e: LpError) -> Fail {
        Fail::Lp(e)
    }
}

/// Exact field operations that may report overflow.
trait Scalar: Clone + Ord + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_big(x: &BigRational) -> Result<Self, Fail>;
    fn to_big(&self) -> BigRational;
    fn add(&self, o: &Self) -> Result<Self, Fail>;
    fn sub(&self, o: &Self) -> Result<Self, Fail>;
    fn mul(&self, o: &Self) -> Result<Self, Fail>;
    fn div(&self, o: &Self) -> Result<Self, Fail>;
    fn is_zero(&self) -> bool;
    fn is_pos(&self) -> bool;
    fn neg(&self) -> Self;
}

impl Scalar for Ratio<i128> {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_big(x: &BigRational) -> Result<Self, Fail> {
        let n = i128::try_from(x.numer()).map_err(|_| Fail::Overflow)?;
        let d = i128::try_from(x.denom()).map_err(|_| Fail::Overflow)?;
        Ok(Ratio::new(n, d))
    }
    fn to_big(&self) -> BigRational {
        BigRational::new(BigInt::from(*self.numer()), BigInt::from(*self.denom()))
    }
    fn add(&self, o: &Self) -> Result<Self, Fail> {
        self.checked_add(o).ok_or(Fail::Overflow)
    }
    fn sub(&self, o: &Self) -> Result<Self, Fail> {
        self.checked_sub(o).ok_or(Fail::Overflow)
    }
    fn mul(&self, o: &Self) -> Result<Self, Fail> {
        self.checked_mul(o).ok_or(Fail::Overflow)
    }
    fn div(&self, o: &Self) -> Result<Self, Fail> {
        self.checked_div(o).ok_or(Fail::Overflow)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn neg(&self) -> Self {
        -*self
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_big(x: &BigRational) -> Result<Self, Fail> {
        Ok(x.clone())
    }
    fn to_big(&self) -> BigRational {
        self.clone()
    }
    fn add(&self, o: &Self) -> Result<Self, Fail> {
        Ok(self + o)
    }
    fn sub(&self, o: &Self) -> Result<Self, Fail> {
        Ok(self - o)
    }
    fn mul(&self, o: &Self) -> Result<Self, Fail> {
        Ok(self * o)
    }
    fn div(&self, o: &Self) -> Result<Self, Fail> {
        Ok(self / o)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
}

type Row<T> = Vec<(usize, T)>;

fn get<T: Scalar>(row: &Row<T>, col: usize) -> Option<&T> {
    row.binary_search_by_key(&col, |e| e.0).ok().map(|k| &row[k].1)
}

/// `a - f * b` for sorted sparse rows.
fn axpy<T: Scalar>(a: &Row<T>, f: &T, b: &Row<T>) -> Result<Row<T>, Fail> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.0.cmp(&y.0),
            (Some(_), None) => Ordering::Less,
            _ => Ordering::Greater,
        };
        match ord {
            Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                out.push((b[j].0, f.mul(&b[j].1)?.neg()));
                j += 1;
            }
            Ordering::Equal => {
                let v = a[i].1.sub(&f.mul(&b[j].1)?)?;
                if !v.is_zero() {
                    out.push((a[i].0, v));
                }
                i += 1;
                j += 1;
            }
        }
    }
    Ok(out)
}

struct Tableau<T> {
    rows: Vec<Row<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    cols: usize,
    // columns never allowed to enter
    banned: Vec<bool>,
}

/// Reduced-cost row: `d[j] = c_j - c_B B^-1 A_j`, kept dense.
struct Objective<T> {
    d: Vec<T>,
    value: T,
}

const DEGENERATE_RUN: usize = 50;

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize, objs: &mut [&mut Objective<T>]) -> Result<(), Fail> {
        let p = get(&self.rows[r], c).expect("pivot on zero").clone();
        if p != T::one() {
            for e in self.rows[r].iter_mut() {
                e.1 = e.1.div(&p)?;
            }
            self.rhs[r] = self.rhs[r].div(&p)?;
        }
        let prow = std::mem::take(&mut self.rows[r]);
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            if let Some(f) = get(&self.rows[i], c).cloned() {
                self.rows[i] = axpy(&self.rows[i], &f, &prow)?;
                self.rhs[i] = self.rhs[i].sub(&f.mul(&self.rhs[r])?)?;
            }
        }
        for obj in objs.iter_mut() {
            let f = obj.d[c].clone();
            if !f.is_zero() {
                for (j, v) in &prow {
                    obj.d[*j] = obj.d[*j].sub(&f.mul(v)?)?;
                }
                obj.value = obj.value.add(&f.mul(&self.rhs[r])?)?;
            }
        }
        self.rows[r] = prow;
        self.basis[r] = c;
        Ok(())
    }

    /// Primal simplex on `objs[0]`; the other objectives are kept in sync.
    fn optimize(&mut self, objs: &mut [&mut Objective<T>]) -> Result<(), Fail> {
        let mut degenerate = 0;
        loop {
            let d = &objs[0].d;
            let bland = degenerate >= DEGENERATE_RUN;
            let mut enter: Option<usize> = None;
            for j in 0..self.cols {
                if self.banned[j] || !d[j].is_pos() {
                    continue;
                }
                match enter {
                    None => enter = Some(j),
                    Some(e) if !bland && d[j] > d[e] => enter = Some(j),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some(c) = enter else { return Ok(()) };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let Some(a) = get(&self.rows[i], c) else { continue };
                if !a.is_pos() {
                    continue;
                }
                let ratio = self.rhs[i].div(a)?;
                let better = match &leave {
                    None => true,
                    Some((l, best)) => match ratio.cmp(best) {
                        Ordering::Less => true,
                        Ordering::Equal => self.basis[i] < self.basis[*l],
                        Ordering::Greater => false,
                    },
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else { return Err(LpError::Unbounded.into()) };
            if ratio.is_zero() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c, objs)?;
        }
    }

    fn objective(&self, c: &[(usize, T)]) -> Result<Objective<T>, Fail> {
        let mut d = vec![T::zero(); self.cols];
        for (j, v) in c {
            d[*j] = v.clone();
        }
        let mut value = T::zero();
        for i in 0..self.rows.len() {
            let cb = d[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for (j, v) in &self.rows[i] {
                d[*j] = d[*j].sub(&cb.mul(v)?)?;
            }
            value = value.add(&cb.mul(&self.rhs[i])?)?;
        }
        Ok(Objective { d, value })
    }
}

fn convert<T: Scalar>(c: &[(usize, BigRational)]) -> Result<Row<T>, Fail> {
    c.iter().map(|(j, v)| Ok((*j, T::from_big(v)?))).collect()
}

fn solve<T: Scalar>(
    lp: &LinearProgram,
    primary: &[(usize, BigRational)],
    secondary: Option<&[(usize, BigRational)]>,
) -> Result<LpSolution, Fail> {
    let n = lp.vars;
    // columns: structural, then one slack per inequality, then artificials
    let mut cols = n;
    let mut rows = Vec::with_capacity(lp.rows.len());
    let mut rhs = Vec::with_capacity(lp.rows.len());
    let mut basis = Vec::with_capacity(lp.rows.len());
    let mut needs_art = Vec::new();
    for con in &lp.rows {
        let mut row = convert::<T>(&con.coeffs)?;
        let mut b = T::from_big(&con.rhs)?;
        let mut rel = con.rel;
        if !b.is_zero() && !b.is_pos() {
            for e in row.iter_mut() {
                e.1 = e.1.neg();
            }
            b = b.neg();
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        match rel {
            Relation::Le => {
                row.push((cols, T::one()));
                basis.push(cols);
                cols += 1;
            }
            Relation::Ge => {
                row.push((cols, T::one().neg()));
                cols += 1;
                basis.push(usize::MAX);
                needs_art.push(rows.len());
            }
            Relation::Eq => {
                basis.push(usize::MAX);
                needs_art.push(rows.len());
            }
        }
        rows.push(row);
        rhs.push(b);
    }
    let first_art = cols;
    for &i in &needs_art {
        rows[i].push((cols, T::one()));
        basis[i] = cols;
        cols += 1;
    }
    let mut tab = Tableau { rows, rhs, basis, cols, banned: vec![false; cols] };

    if !needs_art.is_empty() {
        // phase 1: maximize -sum(artificials)
        let c: Row<T> = (first_art..cols).map(|j| (j, T::one().neg())).collect();
        let mut ph1 = tab.objective(&c)?;
        tab.optimize(&mut [&mut ph1])?;
        if !ph1.value.is_zero() {
            return Err(LpError::Infeasible.into());
        }
        // drive artificials out of the basis, dropping redundant rows
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= first_art {
                let col = tab.rows[i].iter().find(|(j, _)| *j < first_art).map(|e| e.0);
                match col {
                    Some(c) => {
                        tab.pivot(i, c, &mut [])?;
                        i += 1;
                    }
                    None => {
                        tab.rows.swap_remove(i);
                        tab.rhs.swap_remove(i);
                        tab.basis.swap_remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for j in first_art..cols {
            tab.banned[j] = true;
        }
        for row in tab.rows.iter_mut() {
            row.retain(|(j, _)| *j < first_art);
        }
    }

    let mut main = tab.objective(&convert::<T>(primary)?)?;
    tab.optimize(&mut [&mut main])?;
    let value = main.value.to_big();
    if let Some(sec) = secondary {
        // stay on the optimal face: freeze columns with a strictly worse reduced cost
        for j in 0..tab.cols {
            if !main.d[j].is_zero() {
                tab.banned[j] = true;
            }
        }
        let mut s = tab.objective(&convert::<T>(sec)?)?;
        tab.optimize(&mut [&mut s])?;
    }
    let mut x = vec![<BigRational as Zero>::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs[i].to_big();
        }
    }
    Ok(LpSolution { x, objective: value })
}
