//! Modular symbols for Γ_0(n) with nebentypus, in Manin's presentation.
//!
//! A symbol Φ is a map from degree-zero divisors on cusps to a coefficient
//! module with Φ(γD)|γ = ε(d_γ)Φ(D) for γ ∈ Γ_0(n). It is stored through its
//! values x_j = Φ(g_j D0) on the base path D0 = {∞} − {0} moved by coset
//! representatives g_j. Half of those values are eliminated using the
//! two-term relation for σ; the three-term relation for τ (and fixed points
//! of σ) give the linear conditions left over.

use std::sync::Arc;

use num_integer::Integer;
use rayon::prelude::*;

use crate::characters::DirichletCharacter;
use crate::error::{Error, Result};
use crate::linalg::{free_line, kernel, Line, Mat, ResidueRing};

use super::action::MomentAction;
use super::cusp::{path_from_infinity, Cusp, Matrix2};
use super::p1::P1;

/// χ(x) reduced mod p^P.
pub fn residue_of(ch: &DirichletCharacter, x: i64, ring: &ResidueRing) -> u64 {
    if let Some(s) = ch.sign(x) {
        return ring.from_i64(s);
    }
    let v = ch.with_precision(ring.precision() as i64 + 2).eval(x);
    let big = v.to_integer().unwrap_or_default() % num_bigint::BigUint::from(ring.modulus());
    big.try_into().expect("residue fits a word")
}

/// Coset data of Γ_0(n)\SL2(Z) together with the right actions of σ and τ.
#[derive(Clone, Debug)]
pub struct Presentation {
    p1: P1,
    sigma: Vec<usize>,
    tau: Vec<usize>,
}

impl Presentation {
    pub fn new(n: u64) -> Self {
        let p1 = P1::new(n);
        let sigma = (0..p1.len()).map(|j| p1.coset_of(&p1.lift(j).mul(&Matrix2::SIGMA))).collect();
        let tau = (0..p1.len()).map(|j| p1.coset_of(&p1.lift(j).mul(&Matrix2::TAU))).collect();
        Presentation { p1, sigma, tau }
    }

    pub fn level(&self) -> u64 {
        self.p1.level()
    }

    pub fn cosets(&self) -> usize {
        self.p1.len()
    }

    pub fn p1(&self) -> &P1 {
        &self.p1
    }

    pub fn lift(&self, j: usize) -> Matrix2 {
        self.p1.lift(j)
    }

    /// Coset of g_j σ.
    pub fn sigma_image(&self, j: usize) -> usize {
        self.sigma[j]
    }

    /// Coset of g_j τ.
    pub fn tau_image(&self, j: usize) -> usize {
        self.tau[j]
    }

    /// Coset j and γ ∈ Γ_0(n) with h = γ g_j.
    pub fn factor(&self, h: &Matrix2) -> (usize, Matrix2) {
        let j = self.p1.coset_of(h);
        let gamma = h.mul(&self.p1.lift(j).adjugate());
        debug_assert_eq!(gamma.c.rem_euclid(self.level() as i64), 0);
        (j, gamma)
    }
}

/// Hecke-type operator Φ ↦ Σ c_i Φ(s_i ·)|s_i.
#[derive(Clone, Debug)]
pub struct HeckeOp {
    pub label: String,
    pub terms: Vec<(u64, Matrix2)>,
}

/// A symbol space: presentation, coefficient module and nebentypus.
#[derive(Debug)]
pub struct Space {
    pres: Arc<Presentation>,
    module: MomentAction,
    nebentypus: DirichletCharacter,
    eps: Vec<u64>,
    reps: Vec<usize>,
    rep_of: Vec<usize>,
    /// x_j = expr[j] · u_{rep_of[j]}
    expr: Vec<Mat>,
    /// rep index and matrix F with F u_r = 0
    fixed: Vec<(usize, Mat)>,
}

impl Space {
    pub fn new(pres: Arc<Presentation>, module: MomentAction, nebentypus: &DirichletCharacter) -> Result<Arc<Self>> {
        let n = pres.level();
        let ring = module.ring().clone();
        let p = ring.p();
        if !n.is_multiple_of(nebentypus.modulus()) {
            return Err(Error::Domain(format!(
                "character modulus {} does not divide the level {n}",
                nebentypus.modulus()
            )));
        }
        if nebentypus.prime() != p {
            return Err(Error::Domain("character and coefficients use different primes".into()));
        }
        if module.is_distribution() && !n.is_multiple_of(p) {
            return Err(Error::Domain(format!("distribution coefficients need p | n (p = {p}, n = {n})")));
        }
        let eps: Vec<u64> = (0..n as i64).map(|x| residue_of(nebentypus, x, &ring)).collect();
        // −I acts on the module by (−1)^w and must match ε(−1)
        let minus = if module.weight().rem_euclid(2) == 0 { 1 } else { ring.neg(1) };
        if eps[(n - 1) as usize] != minus && n > 2 {
            return Err(Error::Domain(format!(
                "parity mismatch: nebentypus {} is incompatible with weight {}",
                nebentypus.label(),
                module.weight()
            )));
        }
        let count = pres.cosets();
        let dim = module.dim();
        let mut reps = Vec::new();
        let mut rep_of = vec![usize::MAX; count];
        let mut expr: Vec<Option<Mat>> = vec![None; count];
        let mut fixed = Vec::new();
        for j in 0..count {
            if rep_of[j] != usize::MAX {
                continue;
            }
            let r = reps.len();
            reps.push(j);
            rep_of[j] = r;
            expr[j] = Some(Mat::identity(dim));
            // g_j σ = γ g_{j'}: x_j + ε(d_γ) A(γ^{-1}) x_{j'} = 0
            let (jp, gamma) = pres.factor(&pres.lift(j).mul(&Matrix2::SIGMA));
            debug_assert_eq!(jp, pres.sigma_image(j));
            let e = eps[gamma.d.rem_euclid(n as i64) as usize];
            if jp == j {
                let mut f = module.matrix(&gamma.adjugate());
                scale_in_place(&ring, &mut f, e);
                add_identity(&ring, &mut f);
                fixed.push((r, f));
            } else {
                // x_{j'} = −ε(d_γ)^{-1} A(γ) x_j
                let inv = ring.inv_unit(e).expect("character value is a unit");
                let mut t = module.matrix(&gamma);
                scale_in_place(&ring, &mut t, ring.neg(inv));
                rep_of[jp] = r;
                expr[jp] = Some(t);
            }
        }
        Ok(Arc::new(Space {
            pres,
            module,
            nebentypus: nebentypus.clone(),
            eps,
            reps,
            rep_of,
            expr: expr.into_iter().map(|m| m.expect("every coset assigned")).collect(),
            fixed,
        }))
    }

    pub fn presentation(&self) -> &Arc<Presentation> {
        &self.pres
    }

    pub fn module(&self) -> &MomentAction {
        &self.module
    }

    pub fn ring(&self) -> &ResidueRing {
        self.module.ring()
    }

    pub fn level(&self) -> u64 {
        self.pres.level()
    }

    pub fn nebentypus(&self) -> &DirichletCharacter {
        &self.nebentypus
    }

    pub fn dim(&self) -> usize {
        self.module.dim()
    }

    pub fn num_reps(&self) -> usize {
        self.reps.len()
    }

    /// Length of the unknown vector (one module value per representative).
    pub fn unknowns(&self) -> usize {
        self.reps.len() * self.dim()
    }

    /// ε(x) as a residue.
    pub fn character_residue(&self, x: i64) -> u64 {
        self.eps[x.rem_euclid(self.level() as i64) as usize]
    }

    /// Φ(hD0) = ε(d_γ) A(γ^{-1}) x_j as a block acting on u_{rep}.
    fn eval_block(&self, h: &Matrix2) -> (usize, Mat) {
        let (j, gamma) = self.pres.factor(h);
        let e = self.character_residue(gamma.d);
        let a = self.module.matrix(&gamma.adjugate());
        let mut m = a.mul(self.ring(), &self.expr[j]);
        scale_in_place(self.ring(), &mut m, e);
        (self.rep_of[j], m)
    }

    /// Linear map u ↦ Φ({x} − {y}) as signed blocks.
    pub fn divisor_blocks(&self, x: &Cusp, y: &Cusp) -> Vec<(usize, Mat)> {
        let ring = self.ring();
        let mut out = Vec::new();
        for h in path_from_infinity(x) {
            out.push(self.eval_block(&h));
        }
        for h in path_from_infinity(y) {
            let (r, mut m) = self.eval_block(&h);
            scale_in_place(ring, &mut m, ring.neg(1));
            out.push((r, m));
        }
        out
    }

    fn assemble_row(&self, blocks: &[(usize, Mat)]) -> Mat {
        let ring = self.ring();
        let d = self.dim();
        let mut row = Mat::zeros(d, self.unknowns());
        for (r, m) in blocks {
            for i in 0..d {
                for k in 0..d {
                    let col = r * d + k;
                    row.set(i, col, ring.add(row.get(i, col), m.get(i, k)));
                }
            }
        }
        row
    }

    /// Conditions left after eliminating the σ-relation: τ triangles and σ-fixed cosets.
    pub fn relation_matrix(&self) -> Mat {
        let count = self.pres.cosets();
        let mut seen = vec![false; count];
        let mut starts = Vec::new();
        for j in 0..count {
            if seen[j] {
                continue;
            }
            let j2 = self.pres.tau[j];
            let j3 = self.pres.tau[j2];
            seen[j] = true;
            seen[j2] = true;
            seen[j3] = true;
            starts.push(j);
        }
        let mut blocks: Vec<Mat> = starts
            .par_iter()
            .map(|&j| {
                let g = self.pres.lift(j);
                let gt = g.mul(&Matrix2::TAU);
                let gtt = gt.mul(&Matrix2::TAU);
                self.assemble_row(&[self.eval_block(&g), self.eval_block(&gt), self.eval_block(&gtt)])
            })
            .collect();
        for (r, f) in &self.fixed {
            blocks.push(self.assemble_row(&[(*r, f.clone())]));
        }
        Mat::vstack(&blocks)
    }

    /// Matrix of an operator on the unknown vector.
    pub fn operator_matrix(&self, op: &HeckeOp) -> Mat {
        let ring = self.ring();
        let rows: Vec<Mat> = self
            .reps
            .par_iter()
            .map(|&j| {
                let g = self.pres.lift(j);
                let mut blocks = Vec::new();
                for (coef, s) in &op.terms {
                    let (x, y) = s.mul(&g).image_of_base_path();
                    let mut act = self.module.matrix(s);
                    scale_in_place(ring, &mut act, *coef);
                    for (r, m) in self.divisor_blocks(&x, &y) {
                        blocks.push((r, act.mul(ring, &m)));
                    }
                }
                self.assemble_row(&blocks)
            })
            .collect();
        Mat::vstack(&rows)
    }

    /// Value Φ(hD0) for h ∈ SL2(Z) of the symbol with unknowns u.
    fn eval_value(&self, h: &Matrix2, u: &[u64]) -> Vec<u64> {
        let (r, m) = self.eval_block(h);
        let d = self.dim();
        m.mul_vec(self.ring(), &u[r * d..(r + 1) * d])
    }

    /// Φ({x} − {y}) for the symbol with unknowns u.
    pub fn eval_divisor(&self, x: &Cusp, y: &Cusp, u: &[u64]) -> Vec<u64> {
        let ring = self.ring();
        let mut acc = vec![0u64; self.dim()];
        for h in path_from_infinity(x) {
            for (a, b) in acc.iter_mut().zip(self.eval_value(&h, u)) {
                *a = ring.add(*a, b);
            }
        }
        for h in path_from_infinity(y) {
            for (a, b) in acc.iter_mut().zip(self.eval_value(&h, u)) {
                *a = ring.sub(*a, b);
            }
        }
        acc
    }

    /// U_q for q | n, T_q otherwise.
    pub fn hecke(&self, q: u64) -> HeckeOp {
        let q = q as i64;
        let mut terms: Vec<(u64, Matrix2)> = (0..q).map(|a| (1, Matrix2::new(1, a, 0, q))).collect();
        let label = if self.level() as i64 % q == 0 {
            format!("U_{q}")
        } else {
            terms.push((self.character_residue(q), Matrix2::new(q, 0, 0, 1)));
            format!("T_{q}")
        };
        HeckeOp { label, terms }
    }

    pub fn iota(&self) -> HeckeOp {
        HeckeOp {
            label: "iota".into(),
            terms: vec![(1, Matrix2::IOTA)],
        }
    }

    /// Φ ↦ Φ(γ·)|γ for γ ∈ Γ_0(n) with lower-right entry ≡ a; acts by ε(a).
    pub fn diamond(&self, a: i64) -> Result<HeckeOp> {
        let n = self.level() as i64;
        let d = a.rem_euclid(n);
        if d.gcd(&n) != 1 {
            return Err(Error::Domain(format!("{a} is not a unit mod {n}")));
        }
        // x d − y n = 1
        let e = d.extended_gcd(&n);
        let gamma = Matrix2::new(e.x, -e.y, n, d);
        debug_assert_eq!(gamma.det(), 1);
        Ok(HeckeOp {
            label: format!("<{a}>"),
            terms: vec![(1, gamma)],
        })
    }

    /// Multiply block coordinates by p^{e_j} to land in the module lattice.
    fn to_lattice(&self, v: &mut [u64]) {
        let ring = self.ring();
        let ex = self.module.lattice_exponents();
        let d = self.dim();
        for (i, x) in v.iter_mut().enumerate() {
            *x = ring.mul(*x, ring.pow_p(ex[i % d]));
        }
    }

    /// Generators of the module of symbols (satisfying all relations).
    pub fn symbol_module(&self) -> Vec<Vec<u64>> {
        let ring = self.ring();
        let mut rel = self.relation_matrix();
        let ex = self.module.lattice_exponents();
        let d = self.dim();
        for c in 0..rel.cols {
            let f = ring.pow_p(ex[c % d]);
            if f != 1 {
                for r in 0..rel.rows {
                    rel.set(r, c, ring.mul(rel.get(r, c), f));
                }
            }
        }
        let mut gens = Vec::new();
        for mut g in kernel(ring, &rel) {
            self.to_lattice(&mut g);
            if g.iter().any(|&x| x != 0) {
                gens.push(g);
            }
        }
        gens
    }

    /// Generators of the joint eigenmodule {Φ : Φ|O_i = a_i Φ}.
    pub fn eigen_module(&self, conditions: &[(HeckeOp, u64)]) -> Vec<Vec<u64>> {
        let ring = self.ring();
        let base = self.symbol_module();
        if conditions.is_empty() || base.is_empty() {
            return base;
        }
        let n = self.unknowns();
        let y = Mat::from_columns(n, &base);
        let stacked: Vec<Mat> = conditions
            .iter()
            .map(|(op, a)| {
                let o = self.operator_matrix(op);
                let mut oy = o.mul(ring, &y);
                let na = ring.neg(*a);
                for i in 0..n {
                    for c in 0..oy.cols {
                        oy.set(i, c, ring.add(oy.get(i, c), ring.mul(na, y.get(i, c))));
                    }
                }
                oy
            })
            .collect();
        let big = Mat::vstack(&stacked);
        kernel(ring, &big)
            .into_iter()
            .map(|c| y.mul_vec(ring, &c))
            .filter(|v| v.iter().any(|&x| x != 0))
            .collect()
    }

    /// The eigenmodule as a free line, with the torsion exponent as loss.
    pub fn eigen_line(&self, conditions: &[(HeckeOp, u64)]) -> Result<Line> {
        let gens = self.eigen_module(conditions);
        free_line(self.ring(), self.unknowns(), &gens)
    }

    /// Unknowns of the symbol whose values on the cusps are given by `f`
    /// (a Γ_0(n)-equivariant function on cusps).
    pub fn from_cusp_function(&self, f: &(dyn Fn(&Cusp) -> Vec<u64> + Sync)) -> Vec<u64> {
        let ring = self.ring();
        let mut out = Vec::with_capacity(self.unknowns());
        for &j in &self.reps {
            let (x, y) = self.pres.lift(j).image_of_base_path();
            let fx = f(&x);
            let fy = f(&y);
            out.extend(fx.iter().zip(&fy).map(|(&a, &b)| ring.sub(a, b)));
        }
        out
    }
}

fn scale_in_place(ring: &ResidueRing, m: &mut Mat, c: u64) {
    if c == 1 {
        return;
    }
    for x in m.data.iter_mut() {
        *x = ring.mul(*x, c);
    }
}

fn add_identity(ring: &ResidueRing, m: &mut Mat) {
    for i in 0..m.rows.min(m.cols) {
        m.set(i, i, ring.add(m.get(i, i), 1));
    }
}

/// A modular symbol: a space plus the values on σ-representatives.
#[derive(Clone, Debug)]
pub struct Symbol {
    space: Arc<Space>,
    values: Vec<u64>,
}

impl Symbol {
    pub fn new(space: Arc<Space>, values: Vec<u64>) -> Result<Self> {
        if values.len() != space.unknowns() {
            return Err(Error::Input(format!(
                "expected {} coordinates, got {}",
                space.unknowns(),
                values.len()
            )));
        }
        Ok(Symbol { space, values })
    }

    pub fn zero(space: Arc<Space>) -> Self {
        let n = space.unknowns();
        Symbol {
            space,
            values: vec![0; n],
        }
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn ring(&self) -> &ResidueRing {
        self.space.ring()
    }

    pub fn eval(&self, x: &Cusp, y: &Cusp) -> Vec<u64> {
        self.space.eval_divisor(x, y, &self.values)
    }

    /// Φ({∞} − {0}).
    pub fn base_value(&self) -> Vec<u64> {
        self.eval(&Cusp::infinity(), &Cusp::integer(0))
    }

    pub fn apply(&self, op: &HeckeOp) -> Symbol {
        let m = self.space.operator_matrix(op);
        Symbol {
            space: self.space.clone(),
            values: m.mul_vec(self.ring(), &self.values),
        }
    }

    pub fn scale(&self, c: u64) -> Symbol {
        let r = self.ring();
        Symbol {
            space: self.space.clone(),
            values: self.values.iter().map(|&x| r.mul(x, c)).collect(),
        }
    }

    pub fn add(&self, other: &Symbol) -> Symbol {
        let r = self.ring();
        Symbol {
            space: self.space.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| r.add(a, b)).collect(),
        }
    }

    pub fn sub(&self, other: &Symbol) -> Symbol {
        let r = self.ring();
        Symbol {
            space: self.space.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| r.sub(a, b)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&x| x == 0)
    }

    /// Minimal valuation over all coordinates (P when zero).
    pub fn valuation(&self) -> u32 {
        let r = self.ring();
        self.values.iter().map(|&x| r.val(x)).min().unwrap_or(r.precision())
    }

    pub fn satisfies_relations(&self) -> bool {
        self.space.relation_matrix().mul_vec(self.ring(), &self.values).iter().all(|&x| x == 0)
    }

    /// Is Φ|op = λΦ?
    pub fn is_eigen(&self, op: &HeckeOp, lambda: u64) -> bool {
        self.apply(op).values == self.scale(lambda).values
    }
}
