use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionId, ActionSet, Controller};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Determinizer {
    #[default]
    None,
    SafeEarlyStop,
    PreMaxFreq,
    PreMinNorm,
    PreRandom(u64),
}

impl Determinizer {
    pub fn is_preprocessing(self) -> bool {
        matches!(
            self,
            Determinizer::PreMaxFreq | Determinizer::PreMinNorm | Determinizer::PreRandom(_)
        )
    }
}

impl fmt::Display for Determinizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Determinizer::None => f.write_str("none"),
            Determinizer::SafeEarlyStop => f.write_str("safe-early-stop"),
            Determinizer::PreMaxFreq => f.write_str("pre-maxfreq"),
            Determinizer::PreMinNorm => f.write_str("pre-minnorm"),
            Determinizer::PreRandom(seed) => write!(f, "pre-random:{seed}"),
        }
    }
}

impl FromStr for Determinizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        if let Some(seed) = norm.strip_prefix("pre-random:") {
            return seed
                .parse()
                .map(Determinizer::PreRandom)
                .map_err(|_| Error::InvalidConfig(format!("bad random seed in `{s}`")));
        }
        Ok(match norm.as_str() {
            "none" => Determinizer::None,
            "safe-early-stop" | "safe" => Determinizer::SafeEarlyStop,
            "pre-maxfreq" | "maxfreq" => Determinizer::PreMaxFreq,
            "pre-minnorm" | "minnorm" => Determinizer::PreMinNorm,
            "pre-random" => Determinizer::PreRandom(0),
            _ => return Err(Error::InvalidConfig(format!("unknown determinizer `{s}`"))),
        })
    }
}

impl TryFrom<String> for Determinizer {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Determinizer> for String {
    fn from(d: Determinizer) -> String {
        d.to_string()
    }
}

/// Euclidean norm of a `|`-separated numeric action token.
fn token_norm(label: &str) -> Option<f64> {
    let mut sum = 0.0;
    for part in label.split('|') {
        let v: f64 = part.trim().parse().ok()?;
        if !v.is_finite() {
            return None;
        }
        sum += v * v;
    }
    Some(sum.sqrt())
}

/// Picks one action per row. Returns the controller unchanged for the
/// non-preprocessing modes.
pub fn determinize_preprocess(controller: &Controller, mode: Determinizer) -> Result<Controller> {
    let labels = controller.labels();
    let pick: Box<dyn FnMut(&ActionSet) -> ActionId> = match mode {
        Determinizer::None | Determinizer::SafeEarlyStop => return Ok(controller.clone()),
        Determinizer::PreMaxFreq => Box::new(|set: &ActionSet| {
            // ids follow label order; on equal frequency the smaller id wins
            *set.ids()
                .iter()
                .max_by(|a, b| {
                    controller
                        .action_frequency(**a)
                        .cmp(&controller.action_frequency(**b))
                        .then(b.cmp(a))
                })
                .expect("nonempty action set")
        }),
        Determinizer::PreMinNorm => Box::new(|set: &ActionSet| {
            let norms: Vec<Option<f64>> = set
                .ids()
                .iter()
                .map(|id| token_norm(&labels[*id as usize]))
                .collect();
            if norms.iter().all(Option::is_some) {
                let mut best = 0;
                for (i, n) in norms.iter().enumerate() {
                    if n.unwrap() < norms[best].unwrap() {
                        best = i;
                    }
                }
                set.ids()[best]
            } else {
                set.ids()[0]
            }
        }),
        Determinizer::PreRandom(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Box::new(move |set: &ActionSet| set.ids()[rng.gen_range(0..set.len())])
        }
    };
    let mut pick = pick;
    let actions = (0..controller.len())
        .map(|row| ActionSet::singleton(pick(controller.actions(row))))
        .collect();
    controller.with_actions(actions, false)
}
