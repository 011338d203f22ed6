use serde::{Deserialize, Serialize};

use crate::domain::Image;

use super::{Classification, Classifier, Label, OracleError};

/// `intensity(row, col) > threshold`, where intensity is the channel mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conjunct {
    pub row: usize,
    pub col: usize,
    pub threshold: f32,
}

impl Conjunct {
    pub fn new(row: usize, col: usize, threshold: f32) -> Self {
        Self { row, col, threshold }
    }

    fn holds(&self, img: &Image) -> bool {
        self.row < img.height() && self.col < img.width() && img.intensity(self.row, self.col) > self.threshold
    }
}

/// Logistic model over the flattened image: `p = sigmoid(bias + w . x)`.
///
/// `p` is the score of `positive`, `1 - p` the score of `negative`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub labels: [Label; 2],
}

impl LinearModel {
    /// Conformance fixture shared with out-of-process adapters:
    /// `w_i = ((37 i + 11) mod 17) / 8 - 1` and `bias = -0.5 * sum(w)`,
    /// labels 0 (negative) and 1 (positive).
    pub fn fixture(len: usize) -> Self {
        let weights: Vec<f64> = (0..len).map(|i| ((i * 37 + 11) % 17) as f64 / 8.0 - 1.0).collect();
        let bias = -0.5 * weights.iter().sum::<f64>();
        Self {
            weights,
            bias,
            labels: [0, 1],
        }
    }

    pub fn logit(&self, img: &Image) -> Result<f64, OracleError> {
        if self.weights.len() != img.data().len() {
            return Err(OracleError::InvalidInput(format!(
                "linear model has {} weights, image has {} samples",
                self.weights.len(),
                img.data().len()
            )));
        }
        let mut z = self.bias;
        for (w, x) in self.weights.iter().zip(img.data()) {
            z += w * f64::from(*x);
        }
        Ok(z)
    }

    pub fn classify(&self, img: &Image) -> Result<Classification, OracleError> {
        let p = 1.0 / (1.0 + (-self.logit(img)?).exp());
        let [neg, pos] = self.labels;
        let mut scores = vec![0.0; neg.max(pos) as usize + 1];
        scores[neg as usize] = 1.0 - p;
        scores[pos as usize] = p;
        Ok(Classification::from_scores(scores))
    }
}

/// Deterministic stand-in classifiers for tests, examples and the CLI.
#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticClassifier {
    Constant(Label),
    /// `if_true` iff every conjunct holds.
    Threshold {
        conjuncts: Vec<Conjunct>,
        if_true: Label,
        if_false: Label,
    },
    /// `if_true` iff at least one rule has all of its conjuncts holding.
    AnyOf {
        rules: Vec<Vec<Conjunct>>,
        if_true: Label,
        if_false: Label,
    },
    Linear(LinearModel),
    /// [`LinearModel::fixture`] sized to whatever image it sees.
    LinearFixture,
}

impl SyntheticClassifier {
    pub fn constant(label: Label) -> Self {
        Self::Constant(label)
    }

    pub fn threshold(conjuncts: Vec<Conjunct>, if_true: Label, if_false: Label) -> Self {
        Self::Threshold {
            conjuncts,
            if_true,
            if_false,
        }
    }

    pub fn any_of(rules: Vec<Vec<Conjunct>>, if_true: Label, if_false: Label) -> Self {
        Self::AnyOf {
            rules,
            if_true,
            if_false,
        }
    }

    /// Number of labels the classifier can emit (one more than the largest).
    pub fn classes(&self) -> u32 {
        match self {
            Self::Constant(l) => l + 1,
            Self::Threshold { if_true, if_false, .. } | Self::AnyOf { if_true, if_false, .. } => {
                if_true.max(if_false) + 1
            }
            Self::Linear(m) => m.labels[0].max(m.labels[1]) + 1,
            Self::LinearFixture => 2,
        }
    }

    pub fn classify_one(&self, img: &Image) -> Result<Classification, OracleError> {
        Ok(match self {
            Self::Constant(l) => Classification::hard(*l),
            Self::Threshold {
                conjuncts,
                if_true,
                if_false,
            } => Classification::hard(if conjuncts.iter().all(|c| c.holds(img)) {
                *if_true
            } else {
                *if_false
            }),
            Self::AnyOf {
                rules,
                if_true,
                if_false,
            } => Classification::hard(if rules.iter().any(|r| r.iter().all(|c| c.holds(img))) {
                *if_true
            } else {
                *if_false
            }),
            Self::Linear(m) => return m.classify(img),
            Self::LinearFixture => return LinearModel::fixture(img.data().len()).classify(img),
        })
    }

    /// Parses a builtin model spec:
    ///
    /// * `constant@<label>`
    /// * `threshold@r,c,t[;r,c,t...]` (label 1 if all hold, else 0)
    /// * `any@r,c,t[;...]|r,c,t[;...]` (label 1 if any group holds, else 0)
    /// * `linear` (the conformance fixture) or `linear@<model.json>`
    pub fn parse(spec: &str) -> Result<Self, String> {
        let (kind, args) = match spec.split_once('@') {
            Some((k, a)) => (k, Some(a)),
            None => (spec, None),
        };
        let need = |what: &str| args.ok_or_else(|| format!("`{kind}` needs `@{what}`"));
        match kind {
            "constant" => {
                let a = need("<label>")?;
                Ok(Self::Constant(a.trim().parse().map_err(|e| format!("constant label: {e}"))?))
            }
            "threshold" => Ok(Self::threshold(parse_conjuncts(need("r,c,t")?)?, 1, 0)),
            "any" => {
                let rules = need("r,c,t|r,c,t")?
                    .split('|')
                    .map(parse_conjuncts)
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Self::any_of(rules, 1, 0))
            }
            "linear" => match args {
                None => Ok(Self::LinearFixture),
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
                    let model: LinearModel = serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
                    Ok(Self::Linear(model))
                }
            },
            other => Err(format!("unknown builtin model `{other}`")),
        }
    }
}

fn parse_conjuncts(s: &str) -> Result<Vec<Conjunct>, String> {
    s.split(';')
        .map(|part| {
            let fields: Vec<&str> = part.split(',').map(str::trim).collect();
            match fields.as_slice() {
                [r, c, t] => Ok(Conjunct::new(
                    r.parse().map_err(|e| format!("row `{r}`: {e}"))?,
                    c.parse().map_err(|e| format!("col `{c}`: {e}"))?,
                    t.parse().map_err(|e| format!("threshold `{t}`: {e}"))?,
                )),
                _ => Err(format!("expected `row,col,threshold`, got `{part}`")),
            }
        })
        .collect()
}

impl Classifier for SyntheticClassifier {
    fn classify_batch(&self, images: &[Image]) -> Result<Vec<Classification>, OracleError> {
        images.iter().map(|img| self.classify_one(img)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img_with(value_at_11: f32) -> Image {
        Image::from_fn(4, 4, 1, |r, c, _| if (r, c) == (1, 1) { value_at_11 } else { 0.0 }).unwrap()
    }

    #[test]
    fn threshold_rule_fires_above_threshold() {
        let clf = SyntheticClassifier::parse("threshold@1,1,0.5").unwrap();
        assert_eq!(clf.classify_one(&img_with(0.9)).unwrap().label, 1);
        assert_eq!(clf.classify_one(&img_with(0.5)).unwrap().label, 0);
    }

    #[test]
    fn any_of_is_a_disjunction() {
        let clf = SyntheticClassifier::parse("any@0,0,0.5|1,1,0.5").unwrap();
        assert_eq!(clf.classify_one(&img_with(0.9)).unwrap().label, 1);
        assert_eq!(clf.classify_one(&img_with(0.1)).unwrap().label, 0);
    }

    #[test]
    fn linear_hand_computed() {
        let model = LinearModel {
            weights: vec![1.0, -2.0],
            bias: 0.5,
            labels: [3, 1],
        };
        let img = Image::new(1, 2, 1, vec![1.0, 0.5]).unwrap();
        // z = 0.5 + 1 - 1 = 0.5
        let p = 1.0 / (1.0 + (-0.5f64).exp());
        let c = model.classify(&img).unwrap();
        assert_eq!(c.label, 1);
        assert_eq!(c.confidence, p);
        assert_eq!(c.score_for(3), 1.0 - p);
        assert_eq!(c.full_scores.as_ref().unwrap().len(), 4);
    }

    #[test]
    fn fixture_is_centered_on_mid_gray() {
        let img = Image::filled(3, 3, 1, 0.5).unwrap();
        let m = LinearModel::fixture(9);
        assert!(m.logit(&img).unwrap().abs() < 1e-12);
        assert_eq!(m.weights[0], 11.0 / 8.0 - 1.0);
    }

    #[test]
    fn rejects_mismatched_weights() {
        let m = LinearModel::fixture(3);
        assert!(matches!(m.classify(&img_with(0.0)), Err(OracleError::InvalidInput(_))));
    }

    #[test]
    fn parse_errors() {
        for bad in ["nope", "constant", "threshold@1,1", "threshold@a,1,0.5", "constant@x"] {
            assert!(SyntheticClassifier::parse(bad).is_err(), "{bad}");
        }
        assert_eq!(SyntheticClassifier::parse("constant@7").unwrap(), SyntheticClassifier::Constant(7));
    }

    #[test]
    fn deterministic() {
        let clf = SyntheticClassifier::LinearFixture;
        let img = Image::from_fn(4, 4, 3, |r, c, ch| ((r * 7 + c * 3 + ch) % 11) as f32 / 10.0).unwrap();
        assert_eq!(clf.classify_one(&img).unwrap(), clf.classify_one(&img).unwrap());
    }
}
