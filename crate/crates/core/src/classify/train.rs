use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::features::{FeatureSpace, FeatureVector};
use super::{ClassifyError, Setting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    NaiveBayes,
    LogisticRegression,
    LinearSvm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::NaiveBayes,
        ClassifierKind::LogisticRegression,
        ClassifierKind::LinearSvm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "naive_bayes",
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::LinearSvm => "linear_svm",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "naive_bayes" | "nb" => Ok(ClassifierKind::NaiveBayes),
            "logistic_regression" | "lr" | "logreg" => Ok(ClassifierKind::LogisticRegression),
            "linear_svm" | "svm" => Ok(ClassifierKind::LinearSvm),
            other => Err(format!("unknown classifier {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// L2 penalty on weights (biases are not penalized).
    pub l2: f64,
    /// Step size relative to the data's curvature bound.
    pub lr: f64,
    pub epochs: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            l2: 0.01,
            lr: 0.1,
            epochs: 500,
        }
    }
}

/// L2 in {0.01, 0.1, 1} times step size in {0.01, 0.1}, 500 epochs each.
pub fn default_grid() -> Vec<Hyperparams> {
    let mut out = Vec::new();
    for l2 in [0.01, 0.1, 1.0] {
        for lr in [0.01, 0.1] {
            out.push(Hyperparams { l2, lr, epochs: 500 });
        }
    }
    out
}

/// Sparse rows over a fixed feature space with class indices as labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
    pub dim: usize,
}

impl Dataset {
    pub fn new(
        rows: Vec<Vec<(usize, f64)>>,
        labels: Vec<usize>,
        classes: Vec<String>,
        dim: usize,
    ) -> Result<Self, ClassifyError> {
        if rows.is_empty() {
            return Err(ClassifyError::EmptyDataset);
        }
        if rows.len() != labels.len() {
            return Err(ClassifyError::LabelMismatch(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= classes.len()) {
            return Err(ClassifyError::LabelMismatch(format!("label index {l} out of range")));
        }
        if rows.iter().flatten().any(|&(i, x)| i >= dim || !x.is_finite()) {
            return Err(ClassifyError::LabelMismatch("feature index out of range or non-finite".into()));
        }
        Ok(Self {
            rows,
            labels,
            classes,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Projects labeled feature vectors into `space`. `classes` fixes the
    /// class order; every label must be one of them.
    pub fn from_vectors<S: AsRef<str>>(
        space: &FeatureSpace,
        x: &[FeatureVector],
        y: &[S],
        classes: &[String],
    ) -> Result<Self, ClassifyError> {
        if x.len() != y.len() {
            return Err(ClassifyError::LabelMismatch(format!(
                "{} vectors but {} labels",
                x.len(),
                y.len()
            )));
        }
        let labels = y
            .iter()
            .map(|l| {
                classes
                    .iter()
                    .position(|c| c == l.as_ref())
                    .ok_or_else(|| ClassifyError::LabelMismatch(format!("unexpected label {:?}", l.as_ref())))
            })
            .collect::<Result<_, _>>()?;
        Self::new(
            x.iter().map(|v| space.project(v)).collect(),
            labels,
            classes.to_vec(),
            space.len(),
        )
    }

    fn mean_sq_norm(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(_, x)| x * x).sum::<f64>())
            .sum::<f64>()
            / self.len() as f64
    }
}

/// Per-class weight vectors and biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearParams {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            weights: vec![vec![0.0; dim]; classes],
            bias: vec![0.0; classes],
        }
    }

    pub fn scores(&self, row: &[(usize, f64)]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + row.iter().map(|&(i, x)| w[i] * x).sum::<f64>())
            .collect()
    }

    fn sq_norm(&self) -> f64 {
        self.weights.iter().flatten().map(|w| w * w).sum()
    }

    fn axpy(&mut self, a: f64, other: &LinearParams) {
        for (w, o) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in w.iter_mut().zip(o) {
                *x += a * y;
            }
        }
        for (x, y) in self.bias.iter_mut().zip(&other.bias) {
            *x += a * y;
        }
    }
}

/// Mean softmax cross-entropy plus `l2 / 2 * |W|^2`, and its gradient.
pub fn logistic_loss_grad(p: &LinearParams, data: &Dataset, l2: f64) -> (f64, LinearParams) {
    let k = p.bias.len();
    let n = data.len() as f64;
    let mut grad = LinearParams::zeros(k, data.dim);
    let mut loss = 0.0;
    for (row, &y) in data.rows.iter().zip(&data.labels) {
        let s = p.scores(row);
        let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = s.iter().map(|v| (v - max).exp()).sum();
        loss += max + z.ln() - s[y];
        for c in 0..k {
            let g = (s[c] - max).exp() / z - f64::from(u8::from(c == y));
            grad.bias[c] += g / n;
            for &(i, x) in row {
                grad.weights[c][i] += g * x / n;
            }
        }
    }
    finish(p, &mut grad, loss / n, l2)
}

/// Mean multiclass hinge loss `max(0, 1 + max_{k != y} s_k - s_y)` plus
/// `l2 / 2 * |W|^2`, and a subgradient.
pub fn hinge_loss_grad(p: &LinearParams, data: &Dataset, l2: f64) -> (f64, LinearParams) {
    let k = p.bias.len();
    let n = data.len() as f64;
    let mut grad = LinearParams::zeros(k, data.dim);
    let mut loss = 0.0;
    for (row, &y) in data.rows.iter().zip(&data.labels) {
        let s = p.scores(row);
        let Some(rival) = (0..k)
            .filter(|&c| c != y)
            .max_by(|&a, &b| s[a].total_cmp(&s[b]).then(b.cmp(&a)))
        else {
            continue;
        };
        let margin = 1.0 + s[rival] - s[y];
        if margin > 0.0 {
            loss += margin;
            grad.bias[rival] += 1.0 / n;
            grad.bias[y] -= 1.0 / n;
            for &(i, x) in row {
                grad.weights[rival][i] += x / n;
                grad.weights[y][i] -= x / n;
            }
        }
    }
    finish(p, &mut grad, loss / n, l2)
}

fn finish(p: &LinearParams, grad: &mut LinearParams, data_loss: f64, l2: f64) -> (f64, LinearParams) {
    for (g, w) in grad.weights.iter_mut().zip(&p.weights) {
        for (gi, wi) in g.iter_mut().zip(w) {
            *gi += l2 * wi;
        }
    }
    (data_loss + 0.5 * l2 * p.sq_norm(), grad.clone())
}

/// Multinomial naive Bayes with add-one smoothing; weights are log
/// likelihoods, biases log priors.
fn fit_naive_bayes(data: &Dataset) -> Result<LinearParams, ClassifyError> {
    let k = data.classes.len();
    let mut mass = vec![vec![0.0; data.dim]; k];
    let mut docs = vec![0usize; k];
    for (row, &y) in data.rows.iter().zip(&data.labels) {
        docs[y] += 1;
        for &(i, x) in row {
            if x < 0.0 {
                return Err(ClassifyError::NegativeFeature(i));
            }
            mass[y][i] += x;
        }
    }
    let n = data.len() as f64;
    let alpha = 1.0;
    let mut p = LinearParams::zeros(k, data.dim);
    for c in 0..k {
        let total: f64 = mass[c].iter().sum::<f64>() + alpha * data.dim as f64;
        for i in 0..data.dim {
            p.weights[c][i] = ((mass[c][i] + alpha) / total).ln();
        }
        // unseen classes get a tiny prior instead of ln 0
        p.bias[c] = ((docs[c] as f64).max(1e-9) / n).ln();
    }
    Ok(p)
}

/// Trains from zero weights. Gradient methods are full-batch with step
/// `lr / (1 + mean |x|^2 + l2)`; the SVM step also decays with `1 / sqrt(t)`.
pub fn fit(kind: ClassifierKind, data: &Dataset, hp: Hyperparams) -> Result<LinearParams, ClassifyError> {
    if data.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    if kind == ClassifierKind::NaiveBayes {
        return fit_naive_bayes(data);
    }
    let step = hp.lr / (1.0 + data.mean_sq_norm() + hp.l2);
    let mut p = LinearParams::zeros(data.classes.len(), data.dim);
    for epoch in 0..hp.epochs {
        let (loss, grad) = match kind {
            ClassifierKind::LogisticRegression => logistic_loss_grad(&p, data, hp.l2),
            _ => hinge_loss_grad(&p, data, hp.l2),
        };
        if !loss.is_finite() {
            return Err(ClassifyError::NonFiniteLoss { epoch });
        }
        let eta = match kind {
            ClassifierKind::LinearSvm => step / ((epoch + 1) as f64).sqrt(),
            _ => step,
        };
        p.axpy(-eta, &grad);
    }
    Ok(p)
}

/// A trained classifier over a fixed (selected) feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "LinearModelRepr", into = "LinearModelRepr")]
pub struct LinearModel {
    pub kind: ClassifierKind,
    pub setting: Setting,
    pub classes: Vec<String>,
    pub params: LinearParams,
    pub hyperparams: Hyperparams,
    pub seed: u64,
    space: FeatureSpace,
}

#[derive(Serialize, Deserialize)]
struct LinearModelRepr {
    kind: ClassifierKind,
    setting: Setting,
    classes: Vec<String>,
    features: Vec<String>,
    params: LinearParams,
    hyperparams: Hyperparams,
    seed: u64,
}

impl From<LinearModelRepr> for LinearModel {
    fn from(r: LinearModelRepr) -> Self {
        Self {
            kind: r.kind,
            setting: r.setting,
            classes: r.classes,
            params: r.params,
            hyperparams: r.hyperparams,
            seed: r.seed,
            space: FeatureSpace::new(r.features),
        }
    }
}

impl From<LinearModel> for LinearModelRepr {
    fn from(m: LinearModel) -> Self {
        Self {
            kind: m.kind,
            setting: m.setting,
            classes: m.classes,
            features: m.space.names().to_vec(),
            params: m.params,
            hyperparams: m.hyperparams,
            seed: m.seed,
        }
    }
}

impl LinearModel {
    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    /// Class scores for `x`; features outside the model's space are ignored.
    pub fn scores(&self, x: &FeatureVector) -> Vec<f64> {
        self.params.scores(&self.space.project(x))
    }

    pub fn predict(&self, x: &FeatureVector) -> (String, f64) {
        let s = self.scores(x);
        let best = argmax(&s, &self.classes);
        (self.classes[best].clone(), s[best])
    }
}

/// Highest score; ties go to the lexicographically smaller class name.
pub(crate) fn argmax(scores: &[f64], classes: &[String]) -> usize {
    let mut best = 0;
    for i in 1..scores.len() {
        let better = scores[i] > scores[best] || (scores[i] == scores[best] && classes[i] < classes[best]);
        if better {
            best = i;
        }
    }
    best
}

/// Trains one model. `seed` is recorded; training itself starts from zero
/// weights and is fully deterministic.
pub fn train(
    kind: ClassifierKind,
    setting: Setting,
    space: FeatureSpace,
    x: &[FeatureVector],
    y: &[String],
    hp: Hyperparams,
    seed: u64,
) -> Result<LinearModel, ClassifyError> {
    let classes = setting.classes();
    let data = Dataset::from_vectors(&space, x, y, &classes)?;
    let params = fit(kind, &data, hp)?;
    Ok(LinearModel {
        kind,
        setting,
        classes,
        params,
        hyperparams: hp,
        seed,
        space,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SpoilerType;
    use std::collections::BTreeMap;

    fn fv(pairs: &[(&str, f64)]) -> FeatureVector {
        FeatureVector(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>())
    }

    fn binary() -> Setting {
        Setting::OneVsOne(SpoilerType::Phrase, SpoilerType::Passage)
    }

    #[test]
    fn separable_two_points() {
        let x = vec![fv(&[("a", 1.0)]), fv(&[("b", 1.0)])];
        let y = vec!["phrase".to_string(), "passage".to_string()];
        let space = FeatureSpace::new(["a".to_string(), "b".to_string()]);
        for kind in ClassifierKind::ALL {
            let m = train(kind, binary(), space.clone(), &x, &y, Hyperparams::default(), 7).unwrap();
            assert_eq!(m.predict(&x[0]).0, "phrase", "{kind}");
            assert_eq!(m.predict(&x[1]).0, "passage", "{kind}");
        }
    }

    #[test]
    fn naive_bayes_matches_hand_computation() {
        // class phrase: docs {a:2}, {a:1,b:1}; class passage: {b:1}, {c:2}
        let x = vec![
            fv(&[("a", 2.0)]),
            fv(&[("a", 1.0), ("b", 1.0)]),
            fv(&[("b", 1.0)]),
            fv(&[("c", 2.0)]),
        ];
        let y: Vec<String> = ["phrase", "phrase", "passage", "passage"].map(String::from).to_vec();
        let space = FeatureSpace::new(["a", "b", "c"].map(String::from));
        let m = train(ClassifierKind::NaiveBayes, binary(), space, &x, &y, Hyperparams::default(), 0).unwrap();
        // phrase: a 3, b 1, c 0 -> total 4 + 3; passage: a 0, b 1, c 2 -> 3 + 3
        let q = fv(&[("a", 1.0), ("b", 1.0)]);
        let phrase = 0.5f64.ln() + (4.0f64 / 7.0).ln() + (2.0f64 / 7.0).ln();
        let passage = 0.5f64.ln() + (1.0f64 / 6.0).ln() + (2.0f64 / 6.0).ln();
        let s = m.scores(&q);
        let (ip, ia) = (
            m.classes.iter().position(|c| c == "phrase").unwrap(),
            m.classes.iter().position(|c| c == "passage").unwrap(),
        );
        assert!((s[ip] - phrase).abs() < 1e-12);
        assert!((s[ia] - passage).abs() < 1e-12);
        let posterior = phrase.exp() / (phrase.exp() + passage.exp());
        let got = s[ip].exp() / (s[ip].exp() + s[ia].exp());
        assert!((posterior - got).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let x = vec![fv(&[("a", 1.0), ("b", 0.5)]), fv(&[("b", 2.0)]), fv(&[("a", 0.2)])];
        let y: Vec<String> = ["phrase", "passage", "phrase"].map(String::from).to_vec();
        let space = FeatureSpace::new(["a", "b"].map(String::from));
        for kind in ClassifierKind::ALL {
            let a = train(kind, binary(), space.clone(), &x, &y, Hyperparams::default(), 3).unwrap();
            let b = train(kind, binary(), space.clone(), &x, &y, Hyperparams::default(), 3).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_vector_tie_break_and_masking() {
        let space = FeatureSpace::new(["a".to_string()]);
        let m = LinearModel {
            kind: ClassifierKind::LinearSvm,
            setting: binary(),
            classes: vec!["phrase".into(), "passage".into()],
            params: LinearParams::zeros(2, 1),
            hyperparams: Hyperparams::default(),
            seed: 0,
            space,
        };
        assert_eq!(m.predict(&FeatureVector::default()).0, "passage");
        let mut m = m;
        m.params.weights[0][0] = 1.0;
        let x = fv(&[("a", 1.0)]);
        let with_extra = fv(&[("a", 1.0), ("zzz", 100.0)]);
        assert_eq!(m.scores(&x), m.scores(&with_extra));
    }

    #[test]
    fn label_outside_setting() {
        let space = FeatureSpace::new(["a".to_string()]);
        let err = train(
            ClassifierKind::NaiveBayes,
            binary(),
            space,
            &[fv(&[("a", 1.0)])],
            &["multipart".to_string()],
            Hyperparams::default(),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, ClassifyError::LabelMismatch(_)));
    }

    #[test]
    fn non_finite_loss_reported() {
        let data = Dataset::new(vec![vec![(0, 1.0)]], vec![0], vec!["a".into(), "b".into()], 1).unwrap();
        let hp = Hyperparams {
            l2: 0.0,
            lr: f64::INFINITY,
            epochs: 3,
        };
        assert!(matches!(
            fit(ClassifierKind::LogisticRegression, &data, hp),
            Err(ClassifyError::NonFiniteLoss { .. })
        ));
    }

    #[test]
    fn model_serde_round_trip() {
        let x = vec![fv(&[("a", 1.0)]), fv(&[("b", 1.0)])];
        let y: Vec<String> = ["phrase", "passage"].map(String::from).to_vec();
        let space = FeatureSpace::new(["a", "b"].map(String::from));
        let m = train(ClassifierKind::LogisticRegression, binary(), space, &x, &y, Hyperparams::default(), 1).unwrap();
        let back: LinearModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
