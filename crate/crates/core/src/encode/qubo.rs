use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::layout::VariableLayout;
use super::EncodeError;
use crate::scalar::Scalar;

/// Quadratic pseudo-boolean polynomial under construction. Squares collapse
/// onto the linear part (`x*x = x`) and quadratic keys are stored as `(i, j)`
/// with `i < j`, iterated row-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly<S> {
    linear: BTreeMap<usize, S>,
    quadratic: BTreeMap<(usize, usize), S>,
    constant: S,
}

impl<S: Scalar> Poly<S> {
    pub fn new() -> Self {
        Self {
            linear: BTreeMap::new(),
            quadratic: BTreeMap::new(),
            constant: S::zero(),
        }
    }

    pub fn add_constant(&mut self, c: S) {
        self.constant += c;
    }

    pub fn add_linear(&mut self, i: usize, c: S) {
        *self.linear.entry(i).or_insert_with(S::zero) += c;
    }

    pub fn add_quadratic(&mut self, i: usize, j: usize, c: S) {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => self.add_linear(i, c),
            std::cmp::Ordering::Less => *self.quadratic.entry((i, j)).or_insert_with(S::zero) += c,
            std::cmp::Ordering::Greater => {
                *self.quadratic.entry((j, i)).or_insert_with(S::zero) += c
            }
        }
    }

    /// Adds `weight * (sum_k c_k x_k + constant)`.
    pub fn add_affine(&mut self, weight: S, terms: &[(usize, S)], constant: S) {
        for &(i, c) in terms {
            self.add_linear(i, weight * c);
        }
        self.constant += weight * constant;
    }

    /// Adds `weight * (sum_k c_k x_k + constant)^2`, expanded with `x^2 = x`.
    pub fn add_square(&mut self, weight: S, terms: &[(usize, S)], constant: S) {
        let mut merged: BTreeMap<usize, S> = BTreeMap::new();
        for &(i, c) in terms {
            *merged.entry(i).or_insert_with(S::zero) += c;
        }
        let merged: Vec<(usize, S)> = merged.into_iter().collect();
        let two = S::lit(2.0);
        for (k, &(i, ci)) in merged.iter().enumerate() {
            self.add_linear(i, weight * (ci * ci + two * constant * ci));
            for &(j, cj) in &merged[k + 1..] {
                self.add_quadratic(i, j, weight * two * ci * cj);
            }
        }
        self.constant += weight * constant * constant;
    }

    /// `self += factor * other`.
    pub fn accumulate(&mut self, other: &Poly<S>, factor: S) {
        for (&i, &c) in &other.linear {
            self.add_linear(i, factor * c);
        }
        for (&(i, j), &c) in &other.quadratic {
            self.add_quadratic(i, j, factor * c);
        }
        self.constant += factor * other.constant;
    }

    pub fn constant(&self) -> S {
        self.constant
    }

    /// Magnitudes of all nonzero linear and quadratic coefficients.
    pub fn coefficient_magnitudes(&self) -> Vec<S> {
        self.linear
            .values()
            .chain(self.quadratic.values())
            .map(|c| c.abs())
            .filter(|c| !c.is_zero())
            .collect()
    }

    pub fn evaluate(&self, x: &[u8]) -> S {
        let mut e = self.constant;
        for (&i, &c) in &self.linear {
            if x[i] != 0 {
                e += c;
            }
        }
        for (&(i, j), &c) in &self.quadratic {
            if x[i] != 0 && x[j] != 0 {
                e += c;
            }
        }
        e
    }

    pub fn into_model(self, layout: VariableLayout) -> Result<QuboModel<S>, EncodeError> {
        let n = layout.total;
        let mut linear = vec![S::zero(); n];
        for (i, c) in self.linear {
            if i >= n {
                return Err(EncodeError::IndexOutOfRange { index: i, n });
            }
            linear[i] = c;
        }
        QuboModel::new(linear, self.quadratic, self.constant, layout)
    }
}

/// One weighted penalty or cost component of a model, kept for energy
/// breakdowns. Its contribution to the model is `lambda * normalization * poly`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedTerm<S> {
    pub name: String,
    pub lambda: S,
    pub normalization: S,
    pub poly: Poly<S>,
}

impl<S: Scalar> EncodedTerm<S> {
    /// Unweighted, unnormalised value of the term at `x`.
    pub fn raw_value(&self, x: &[u8]) -> S {
        self.poly.evaluate(x)
    }
}

/// Minimisation QUBO `E(x) = sum_i a_i x_i + sum_{i<j} b_ij x_i x_j + offset`.
#[derive(Debug, Clone)]
pub struct QuboModel<S> {
    linear: Vec<S>,
    quadratic: BTreeMap<(usize, usize), S>,
    offset: S,
    layout: VariableLayout,
    terms: Vec<EncodedTerm<S>>,
    warnings: Vec<String>,
    adj_start: Vec<usize>,
    adj_index: Vec<usize>,
    adj_coef: Vec<S>,
}

impl<S: Scalar> PartialEq for QuboModel<S> {
    fn eq(&self, other: &Self) -> bool {
        self.linear == other.linear
            && self.quadratic == other.quadratic
            && self.offset == other.offset
            && self.layout == other.layout
    }
}

impl<S: Scalar> QuboModel<S> {
    pub fn new(
        linear: Vec<S>,
        quadratic: BTreeMap<(usize, usize), S>,
        offset: S,
        layout: VariableLayout,
    ) -> Result<Self, EncodeError> {
        let n = linear.len();
        if layout.total != n {
            return Err(EncodeError::InvalidModel(format!(
                "layout covers {} variables, model has {n}",
                layout.total
            )));
        }
        for (&(i, j), c) in &quadratic {
            if !(i < j && j < n) {
                return Err(EncodeError::InvalidModel(format!(
                    "quadratic key ({i}, {j}) must satisfy i < j < {n}"
                )));
            }
            if !c.is_finite() {
                return Err(EncodeError::InvalidModel(format!(
                    "non-finite coefficient at ({i}, {j})"
                )));
            }
        }
        if linear.iter().any(|c| !c.is_finite()) || !offset.is_finite() {
            return Err(EncodeError::InvalidModel("non-finite coefficient".into()));
        }

        let mut degree = vec![0usize; n];
        for &(i, j) in quadratic.keys() {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut adj_start = Vec::with_capacity(n + 1);
        adj_start.push(0);
        for d in &degree {
            adj_start.push(adj_start.last().unwrap() + d);
        }
        let mut fill = adj_start[..n].to_vec();
        let total = adj_start[n];
        let mut adj_index = vec![0; total];
        let mut adj_coef = vec![S::zero(); total];
        for (&(i, j), &c) in &quadratic {
            adj_index[fill[i]] = j;
            adj_coef[fill[i]] = c;
            fill[i] += 1;
            adj_index[fill[j]] = i;
            adj_coef[fill[j]] = c;
            fill[j] += 1;
        }

        Ok(Self {
            linear,
            quadratic,
            offset,
            layout,
            terms: Vec::new(),
            warnings: Vec::new(),
            adj_start,
            adj_index,
            adj_coef,
        })
    }

    pub(crate) fn with_terms(mut self, terms: Vec<EncodedTerm<S>>) -> Self {
        self.terms = terms;
        self
    }

    pub(crate) fn with_warnings(mut self, warnings: Vec<String>) -> Self {
        self.warnings = warnings;
        self
    }

    pub fn dimension(&self) -> usize {
        self.linear.len()
    }

    pub fn linear(&self) -> &[S] {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), S> {
        &self.quadratic
    }

    pub fn offset(&self) -> S {
        self.offset
    }

    pub fn layout(&self) -> &VariableLayout {
        &self.layout
    }

    pub fn terms(&self) -> &[EncodedTerm<S>] {
        &self.terms
    }

    pub fn term(&self, name: &str) -> Option<&EncodedTerm<S>> {
        self.terms.iter().find(|t| t.name == name)
    }

    /// Non-fatal findings from the encoder (for instance, an exposure that no
    /// representable allocation can reach).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Neighbours of `i` with their coupling coefficients.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, S)> + '_ {
        let range = self.adj_start[i]..self.adj_start[i + 1];
        self.adj_index[range.clone()]
            .iter()
            .copied()
            .zip(self.adj_coef[range].iter().copied())
    }

    pub fn energy(&self, x: &[u8]) -> S {
        debug_assert_eq!(x.len(), self.dimension());
        let mut e = self.offset;
        for (a, &xi) in self.linear.iter().zip(x) {
            if xi != 0 {
                e += *a;
            }
        }
        for (&(i, j), &b) in &self.quadratic {
            if x[i] != 0 && x[j] != 0 {
                e += b;
            }
        }
        e
    }

    /// `E(x with bit `flip` toggled) - E(x)`, in time proportional to the
    /// degree of `flip`.
    pub fn delta_energy(&self, x: &[u8], flip: usize) -> Result<S, EncodeError> {
        if flip >= self.dimension() {
            return Err(EncodeError::IndexOutOfRange {
                index: flip,
                n: self.dimension(),
            });
        }
        Ok(self.delta_unchecked(x, flip))
    }

    pub(crate) fn delta_unchecked(&self, x: &[u8], flip: usize) -> S {
        let mut field = self.linear[flip];
        for (j, b) in self.neighbors(flip) {
            if x[j] != 0 {
                field += b;
            }
        }
        if x[flip] != 0 {
            -field
        } else {
            field
        }
    }

    /// Smallest nonzero coefficient magnitude (linear or quadratic).
    pub fn min_abs_coefficient(&self) -> Option<S> {
        self.linear
            .iter()
            .chain(self.quadratic.values())
            .map(|c| c.abs())
            .filter(|c| !c.is_zero())
            .fold(None, |acc, c| Some(acc.map_or(c, |a: S| a.min(c))))
    }

    /// Upper bound on `|delta_energy|` over all states and flips.
    pub fn max_abs_delta(&self) -> S {
        (0..self.dimension())
            .map(|i| {
                self.neighbors(i)
                    .fold(self.linear[i].abs(), |acc, (_, b)| acc + b.abs())
            })
            .fold(S::zero(), S::max)
    }

    /// Converts every coefficient to another scalar type. Term breakdowns are
    /// carried over; warnings are kept verbatim.
    pub fn cast<T: Scalar>(&self) -> QuboModel<T> {
        let conv = |v: S| T::lit(v.as_f64());
        let linear = self.linear.iter().map(|&v| conv(v)).collect();
        let quadratic = self.quadratic.iter().map(|(&k, &v)| (k, conv(v))).collect();
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut poly = Poly::new();
                for (&i, &c) in &t.poly.linear {
                    poly.add_linear(i, conv(c));
                }
                for (&(i, j), &c) in &t.poly.quadratic {
                    poly.add_quadratic(i, j, conv(c));
                }
                poly.add_constant(conv(t.poly.constant));
                EncodedTerm {
                    name: t.name.clone(),
                    lambda: conv(t.lambda),
                    normalization: conv(t.normalization),
                    poly,
                }
            })
            .collect();
        QuboModel::new(linear, quadratic, conv(self.offset), self.layout.clone())
            .expect("casting preserves structure")
            .with_terms(terms)
            .with_warnings(self.warnings.clone())
    }

    /// SHA-256 over the dimension and the bit patterns of all coefficients,
    /// as a lowercase hex string.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dimension() as u64).to_le_bytes());
        for v in &self.linear {
            h.update(v.as_f64().to_bits().to_le_bytes());
        }
        for (&(i, j), v) in &self.quadratic {
            h.update((i as u64).to_le_bytes());
            h.update((j as u64).to_le_bytes());
            h.update(v.as_f64().to_bits().to_le_bytes());
        }
        h.update(self.offset.as_f64().to_bits().to_le_bytes());
        h.finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// On-disk QUBO document: `{n, linear, quadratic: [[i, j, value]], offset, layout}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboDocument {
    pub n: usize,
    pub linear: Vec<f64>,
    pub quadratic: Vec<(usize, usize, f64)>,
    pub offset: f64,
    pub layout: VariableLayout,
}

impl QuboModel<f64> {
    pub fn to_document(&self) -> QuboDocument {
        QuboDocument {
            n: self.dimension(),
            linear: self.linear.clone(),
            quadratic: self
                .quadratic
                .iter()
                .map(|(&(i, j), &v)| (i, j, v))
                .collect(),
            offset: self.offset,
            layout: self.layout.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("QUBO serialises")
    }

    pub fn from_document(doc: QuboDocument) -> Result<Self, EncodeError> {
        if doc.linear.len() != doc.n {
            return Err(EncodeError::InvalidModel(format!(
                "n = {} but {} linear coefficients",
                doc.n,
                doc.linear.len()
            )));
        }
        let mut quadratic = BTreeMap::new();
        for (i, j, v) in doc.quadratic {
            if quadratic.insert((i, j), v).is_some() {
                return Err(EncodeError::InvalidModel(format!(
                    "duplicate quadratic key ({i}, {j})"
                )));
            }
        }
        let layout = if doc.layout.total == 0 && doc.n > 0 {
            VariableLayout {
                total: doc.n,
                ..VariableLayout::default()
            }
        } else {
            doc.layout
        };
        QuboModel::new(doc.linear, quadratic, doc.offset, layout)
    }

    pub fn from_json(text: &str) -> Result<Self, EncodeError> {
        let doc: QuboDocument =
            serde_json::from_str(text).map_err(|e| EncodeError::Parse(e.to_string()))?;
        Self::from_document(doc)
    }
}
