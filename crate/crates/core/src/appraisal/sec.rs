//! Stimulus evaluation checks: the fast, reactive appraisal of a single act.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{ActInstance, CatalogError};
use crate::deliberation::{discharges, Obligation};
use crate::logic::{match_pattern, parse_pattern, AgentId, Formula};
use crate::memory::Snapshot;
use crate::planner::Operator;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SecConfig {
    pub expected_novelty: f64,
    pub unexpected_novelty: f64,
    pub high_coping: f64,
    pub low_coping: f64,
    pub novelty_threshold: f64,
    pub pleasantness_threshold: f64,
    pub goal_threshold: f64,
    pub coping_threshold: f64,
    pub norm_threshold: f64,
}

impl Default for SecConfig {
    fn default() -> Self {
        SecConfig {
            expected_novelty: 0.2,
            unexpected_novelty: 1.0,
            high_coping: 1.0,
            low_coping: 0.2,
            novelty_threshold: 0.5,
            pleasantness_threshold: 0.3,
            goal_threshold: 0.3,
            coping_threshold: 0.4,
            norm_threshold: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecProfile {
    pub act_id: String,
    pub novelty: f64,
    pub pleasantness: f64,
    pub goal_congruence: f64,
    pub coping_potential: f64,
    pub norm_compatibility: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecCheck {
    Novelty,
    Pleasantness,
    GoalCongruence,
    CopingPotential,
    NormCompatibility,
}

impl SecCheck {
    pub const ALL: [SecCheck; 5] = [
        SecCheck::Novelty,
        SecCheck::Pleasantness,
        SecCheck::GoalCongruence,
        SecCheck::CopingPotential,
        SecCheck::NormCompatibility,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SecLabel {
    #[serde(rename = "Nouveau")]
    New,
    #[serde(rename = "Attendu")]
    Expected,
    #[serde(rename = "Plaisant")]
    Pleasant,
    #[serde(rename = "Déplaisant")]
    Unpleasant,
    #[serde(rename = "Neutre")]
    Neutral,
    #[serde(rename = "Attentes-satisfaites")]
    ExpectationsMet,
    #[serde(rename = "Attentes-insatisfaites")]
    ExpectationsUnmet,
    #[serde(rename = "Peu-de-contrôle")]
    LowControl,
    #[serde(rename = "Contrôle-élevé")]
    HighControl,
    #[serde(rename = "Norme-respectée")]
    NormRespected,
    #[serde(rename = "Norme-violée")]
    NormViolated,
}

impl SecLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SecLabel::New => "Nouveau",
            SecLabel::Expected => "Attendu",
            SecLabel::Pleasant => "Plaisant",
            SecLabel::Unpleasant => "Déplaisant",
            SecLabel::Neutral => "Neutre",
            SecLabel::ExpectationsMet => "Attentes-satisfaites",
            SecLabel::ExpectationsUnmet => "Attentes-insatisfaites",
            SecLabel::LowControl => "Peu-de-contrôle",
            SecLabel::HighControl => "Contrôle-élevé",
            SecLabel::NormRespected => "Norme-respectée",
            SecLabel::NormViolated => "Norme-violée",
        }
    }
}

impl fmt::Display for SecLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One label per check, in check order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpressionSequence(pub [SecLabel; 5]);

impl ExpressionSequence {
    pub fn pairs(&self) -> impl Iterator<Item = (SecCheck, SecLabel)> + '_ {
        SecCheck::ALL.into_iter().zip(self.0.iter().copied())
    }

    pub fn labels(&self) -> Vec<&'static str> {
        self.0.iter().map(|l| l.as_str()).collect()
    }
}

pub fn sec_to_labels(p: &SecProfile, config: &SecConfig) -> ExpressionSequence {
    let split = |x: f64, t: f64, low: SecLabel, high: SecLabel| {
        if x <= -t {
            low
        } else if x >= t {
            high
        } else {
            SecLabel::Neutral
        }
    };
    ExpressionSequence([
        if p.novelty >= config.novelty_threshold { SecLabel::New } else { SecLabel::Expected },
        split(p.pleasantness, config.pleasantness_threshold, SecLabel::Unpleasant, SecLabel::Pleasant),
        split(
            p.goal_congruence,
            config.goal_threshold,
            SecLabel::ExpectationsUnmet,
            SecLabel::ExpectationsMet,
        ),
        if p.coping_potential <= config.coping_threshold { SecLabel::LowControl } else { SecLabel::HighControl },
        split(p.norm_compatibility, config.norm_threshold, SecLabel::NormViolated, SecLabel::NormRespected),
    ])
}

/// Goals or ideals of `agent` whose content equals `content` (sign +1) or
/// its complement (sign -1), with their priorities.
fn touched(snap: &Snapshot, modality: &str, agent: &AgentId, content: &Formula) -> Vec<(f64, f64)> {
    let pattern = parse_pattern(&format!("{modality}({agent}, ?X)")).expect("static pattern");
    let target = content.without_priorities();
    let complement = content.negate().without_priorities();
    snap.episodic()
        .query(&pattern)
        .into_iter()
        .filter_map(|(fact, sigma)| {
            let inner = sigma.formula("X")?.without_priorities();
            let p = fact.formula.priority().map(|p| p.value()).unwrap_or(0.5);
            if inner == target {
                Some((1.0, p))
            } else if inner == complement {
                Some((-1.0, p))
            } else {
                None
            }
        })
        .collect()
}

/// Whether some operator can bring about the complement of `content`.
pub fn can_undo(content: &Formula, operators: &[Operator]) -> bool {
    let complement = content.negate();
    operators.iter().any(|op| {
        op.add.iter().any(|e| match_pattern(e, &complement).is_some())
            || op.del.iter().any(|e| match_pattern(e, content).is_some())
    })
}

/// The five checks for `act`, read from the snapshot taken when it arrived.
pub fn appraise_sensorimotor(
    act: &ActInstance,
    snap: &Snapshot,
    self_agent: &AgentId,
    pending: &[Obligation],
    config: &SecConfig,
) -> Result<SecProfile, CatalogError> {
    let def = snap.semantic().catalog().definition(&act.act)?;
    let rules = snap.procedural().discourse_rules();
    let expected = pending.iter().any(|o| discharges(act, o, rules, snap, self_agent));
    let novelty = if expected { config.expected_novelty } else { config.unexpected_novelty };

    let goals = touched(snap, "Goal", self_agent, &act.content);
    let ideals = touched(snap, "Ideal", self_agent, &act.content);
    let all: Vec<(f64, f64)> = goals.iter().chain(ideals.iter()).copied().collect();
    let content_valence = if all.iter().any(|(s, _)| *s < 0.0) {
        -1.0
    } else if all.iter().any(|(s, _)| *s > 0.0) {
        1.0
    } else {
        0.0
    };
    let pleasantness = (0.5 * def.valence + 0.5 * content_valence).clamp(-1.0, 1.0);
    let goal_congruence = (all.iter().map(|(s, p)| s * p).sum::<f64>() + 0.0).clamp(-1.0, 1.0);

    let coping_potential = if content_valence > 0.0
        || (content_valence < 0.0 && can_undo(&act.content, snap.procedural().operators()))
    {
        config.high_coping
    } else {
        config.low_coping
    };

    let violated = ideals.iter().filter(|(s, _)| *s < 0.0).map(|(_, p)| *p).fold(None, max_opt);
    let upheld = ideals.iter().filter(|(s, _)| *s > 0.0).map(|(_, p)| *p).fold(None, max_opt);
    let norm_compatibility = match (violated, upheld) {
        (Some(v), _) => -v,
        (None, Some(u)) => u,
        (None, None) => 0.0,
    };

    Ok(SecProfile {
        act_id: act.id.clone(),
        novelty,
        pleasantness,
        goal_congruence,
        coping_potential: coping_potential.clamp(0.0, 1.0),
        norm_compatibility: norm_compatibility.clamp(-1.0, 1.0),
    })
}

fn max_opt(acc: Option<f64>, x: f64) -> Option<f64> {
    Some(acc.map_or(x, |a: f64| a.max(x)))
}
