//! Privacy actions: the base-action catalog, the space of non-empty
//! action sets of bounded size, and compilation of a set into an
//! executable plan.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::frqi::{self, AngleImage, FrqiLayout};
use crate::image::GrayImage;
use crate::qsim::{Circuit, Gate};
use crate::{rng, Error, Result};

pub const DEFAULT_SHOT_LEVELS: [u64; 6] = [4096, 2048, 1024, 512, 256, 128];
pub const DEFAULT_PIXEL_FRACTIONS: [f64; 6] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BaseAction {
    /// RX(angle) on the color qubit, controlled on positional qubit
    /// p_`control` reading `control_value`.
    CrxGate { control: usize, control_value: bool, angle: f64 },
    /// Measure with this many shots instead of the default.
    ShotNoise { shots: u64 },
    /// Redact ⌈fraction·pixels⌉ random pixels to `theta_r` before encoding.
    PixelNoise { fraction: f64, theta_r: f64 },
}

impl BaseAction {
    fn validate(&self, layout: FrqiLayout) -> Result<()> {
        match *self {
            BaseAction::CrxGate { control, .. } if control >= layout.num_positional() => Err(Error::Action(
                format!("control p{control} outside {} positional qubits", layout.num_positional()),
            )),
            BaseAction::ShotNoise { shots: 0 } => Err(Error::Action("zero shots".into())),
            BaseAction::PixelNoise { fraction, theta_r }
                if !(fraction > 0.0 && fraction <= 1.0) || !(0.0..=FRAC_PI_2).contains(&theta_r) =>
            {
                Err(Error::Action(format!("pixel noise fraction {fraction}, angle {theta_r}")))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            BaseAction::CrxGate { control, control_value, angle } => {
                format!("crx(p{control}={},{angle:.4})", u8::from(control_value))
            }
            BaseAction::ShotNoise { shots } => format!("shots({shots})"),
            BaseAction::PixelNoise { fraction, theta_r } => format!("pixels({fraction},{theta_r:.4})"),
        }
    }
}

/// Ordered, index-addressable list of base actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionCatalog {
    pub layout: FrqiLayout,
    pub actions: Vec<BaseAction>,
    pub max_select: usize,
}

impl ActionCatalog {
    pub fn new(layout: FrqiLayout, actions: Vec<BaseAction>, max_select: usize) -> Result<Self> {
        if actions.is_empty() || actions.len() > 64 {
            return Err(Error::Action(format!("catalog of {} actions", actions.len())));
        }
        if max_select == 0 {
            return Err(Error::Action("max_select must be ≥ 1".into()));
        }
        actions.iter().try_for_each(|a| a.validate(layout))?;
        Ok(Self { layout, actions, max_select })
    }

    /// 16 CRX(π/2) gates (each positional control, value 1 then value 0),
    /// six shot levels and six pixel-redaction fractions at θ = π/4.
    pub fn default_for(layout: FrqiLayout) -> Result<Self> {
        if layout.n() != 4 {
            return Err(Error::Layout(format!("default catalog needs 16×16 images, got side {}", layout.side())));
        }
        let gates = [true, false].into_iter().flat_map(|v| {
            (0..layout.num_positional()).map(move |k| BaseAction::CrxGate {
                control: k,
                control_value: v,
                angle: FRAC_PI_2,
            })
        });
        let shots = DEFAULT_SHOT_LEVELS.iter().map(|&shots| BaseAction::ShotNoise { shots });
        let pixels = DEFAULT_PIXEL_FRACTIONS
            .iter()
            .map(|&fraction| BaseAction::PixelNoise { fraction, theta_r: FRAC_PI_4 });
        Self::new(layout, gates.chain(shots).chain(pixels).collect(), 4)
    }

    /// Reduced 8-action catalog for desk-scale runs: four CRX(π/2) gates
    /// on the high-order x/y bits, a light and a heavy shot level, a light
    /// and a heavy redaction level.
    pub fn reduced(layout: FrqiLayout) -> Result<Self> {
        let hi_x = layout.n() - 1;
        let hi_y = 2 * layout.n() - 1;
        let crx = |control, control_value| BaseAction::CrxGate { control, control_value, angle: FRAC_PI_2 };
        Self::new(
            layout,
            vec![
                crx(hi_x, true),
                crx(hi_y, true),
                crx(hi_x, false),
                crx(hi_y, false),
                BaseAction::ShotNoise { shots: 4096 },
                BaseAction::ShotNoise { shots: 256 },
                BaseAction::PixelNoise { fraction: 0.05, theta_r: FRAC_PI_4 },
                BaseAction::PixelNoise { fraction: 0.3, theta_r: FRAC_PI_4 },
            ],
            2,
        )
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: ActionCatalog = serde_json::from_str(s)?;
        Self::new(raw.layout, raw.actions, raw.max_select)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("catalog serializes");
        hex::encode(Sha256::digest(json))
    }
}

/// Strictly increasing catalog indices, 1..=max_select of them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionSet(Vec<usize>);

impl ActionSet {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.is_empty() || indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Action(format!("action set {indices:?} must be non-empty and distinct")));
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// All non-empty subsets of size ≤ max_select, ordered by size and then
/// lexicographically. Index ↔ set conversion is combinatorial, so the
/// space is never materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpace {
    num_actions: usize,
    max_select: usize,
}

impl ActionSpace {
    pub fn new(num_actions: usize, max_select: usize) -> Self {
        Self { num_actions, max_select: max_select.min(num_actions) }
    }

    pub fn for_catalog(catalog: &ActionCatalog) -> Self {
        Self::new(catalog.len(), catalog.max_select)
    }

    /// Σₖ C(n, k) for k = 1..=max_select.
    pub fn len(&self) -> usize {
        (1..=self.max_select).map(|k| binomial(self.num_actions, k)).sum::<u64>() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn encode(&self, set: &ActionSet) -> Result<usize> {
        let k = set.len();
        if k > self.max_select || set.0.last().is_some_and(|&i| i >= self.num_actions) {
            return Err(Error::Action(format!("{set:?} not in a space of {} / max {}", self.num_actions, self.max_select)));
        }
        let offset: u64 = (1..k).map(|j| binomial(self.num_actions, j)).sum();
        let mut rank = 0u64;
        let mut next = 0;
        for (pos, &c) in set.0.iter().enumerate() {
            // combinations that agree so far but pick a smaller element here
            for skipped in next..c {
                rank += binomial(self.num_actions - 1 - skipped, k - 1 - pos);
            }
            next = c + 1;
        }
        Ok((offset + rank) as usize)
    }

    pub fn decode(&self, index: usize) -> Result<ActionSet> {
        if index >= self.len() {
            return Err(Error::Action(format!("action index {index} ≥ {}", self.len())));
        }
        let mut rank = index as u64;
        let mut k = 1;
        while rank >= binomial(self.num_actions, k) {
            rank -= binomial(self.num_actions, k);
            k += 1;
        }
        let mut out = Vec::with_capacity(k);
        let mut c = 0;
        for pos in 0..k {
            loop {
                let block = binomial(self.num_actions - 1 - c, k - 1 - pos);
                if rank < block {
                    break;
                }
                rank -= block;
                c += 1;
            }
            out.push(c);
            c += 1;
        }
        Ok(ActionSet(out))
    }

    /// Every set in index order.
    pub fn iter(&self) -> impl Iterator<Item = ActionSet> + '_ {
        (0..self.len()).map(|i| self.decode(i).expect("index in range"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelRedaction {
    pub fraction: f64,
    pub theta_r: f64,
    pub seed: u64,
}

/// Executable form of an action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionPlan {
    pub gate_suffix: Vec<Gate>,
    pub shots_override: Option<u64>,
    /// Applied in order before encoding; each draws its own pixels.
    pub pixel_redactions: Vec<PixelRedaction>,
}

impl ActionPlan {
    /// No gates, no overrides: a plain FRQI capture.
    pub fn identity() -> Self {
        Self { gate_suffix: Vec::new(), shots_override: None, pixel_redactions: Vec::new() }
    }

    pub fn circuit(&self, layout: FrqiLayout) -> Result<Circuit> {
        Circuit::from_gates(layout.num_qubits(), self.gate_suffix.clone())
    }

    /// Redact, encode, apply the gate suffix and measure.
    pub fn render(&self, angles: &AngleImage, default_shots: u64, seed: u64) -> Result<GrayImage> {
        let layout = angles.layout();
        let mut angles = angles.clone();
        for r in &self.pixel_redactions {
            let pixels = redaction_pixels(layout.num_pixels(), r.fraction, r.seed);
            angles = frqi::redact_pixels(&angles, &pixels, r.theta_r)?;
        }
        let mut state = frqi::prepare_state(&angles)?;
        for g in &self.gate_suffix {
            state.apply_gate(g)?;
        }
        frqi::measure_image(&state, self.shots_override.unwrap_or(default_shots), seed, layout)
    }
}

/// ⌈fraction·pixels⌉ distinct pixels, uniformly at random.
pub fn redaction_pixels(num_pixels: usize, fraction: f64, seed: u64) -> BTreeSet<usize> {
    let count = ((fraction * num_pixels as f64).ceil() as usize).min(num_pixels);
    index::sample(&mut rng::rng(seed), num_pixels, count).into_iter().collect()
}

/// Gates are appended in catalog order, the smallest selected shot count
/// wins, and each pixel-noise entry becomes a seeded redaction.
pub fn compile(set: &ActionSet, catalog: &ActionCatalog, seed: u64) -> Result<ActionPlan> {
    let layout = catalog.layout;
    let mut plan = ActionPlan::identity();
    for &i in set.indices() {
        let action = catalog
            .actions
            .get(i)
            .ok_or_else(|| Error::Action(format!("catalog index {i} ≥ {}", catalog.len())))?;
        match *action {
            BaseAction::CrxGate { control, control_value, angle } => plan.gate_suffix.push(
                Gate::rx(layout.color_qubit(), angle).controlled(layout.positional_qubit(control), control_value),
            ),
            BaseAction::ShotNoise { shots } => {
                plan.shots_override = Some(plan.shots_override.map_or(shots, |s| s.min(shots)));
            }
            BaseAction::PixelNoise { fraction, theta_r } => plan.pixel_redactions.push(PixelRedaction {
                fraction,
                theta_r,
                seed: rng::derive(seed, "pixel-noise", i as u64),
            }),
        }
    }
    Ok(plan)
}
