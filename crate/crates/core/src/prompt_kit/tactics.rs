use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::PromptError;
use crate::macro_sim::{BuildingKind, TechKind, UnitKind};

/// One expert tactic in the six-field schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TacticCard {
    pub name: String,
    #[serde(default)]
    pub key_buildings: Vec<String>,
    #[serde(default)]
    pub key_technologies: Vec<String>,
    #[serde(default)]
    pub key_forces: Vec<String>,
    pub key_timing: String,
    pub applicable_situation: String,
}

impl TacticCard {
    /// Checks the name and that every referenced entity exists in the game data.
    pub fn validate(&self) -> Result<(), PromptError> {
        let bad =
            |what: &str, v: &str| PromptError::AssetParse(format!("tactic {:?}: unknown {what} {v:?}", self.name));
        if self.name.trim().is_empty() {
            return Err(PromptError::AssetParse("tactic with an empty name".into()));
        }
        for b in &self.key_buildings {
            b.parse::<BuildingKind>().map_err(|_| bad("building", b))?;
        }
        for t in &self.key_technologies {
            t.parse::<TechKind>().map_err(|_| bad("technology", t))?;
        }
        for u in &self.key_forces {
            u.parse::<UnitKind>().map_err(|_| bad("unit", u))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TacticBase {
    pub preamble: String,
    pub selection: String,
    #[serde(rename = "tactic", default)]
    pub cards: Vec<TacticCard>,
}

impl TacticBase {
    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.cards.iter().map(|c| c.name.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&TacticCard> {
        self.cards.iter().find(|c| c.name == name)
    }
}

pub fn parse_tactics(text: &str) -> Result<TacticBase, PromptError> {
    let base: TacticBase = toml::from_str(text).map_err(|e| PromptError::AssetParse(format!("tactics: {e}")))?;
    if base.cards.is_empty() {
        return Err(PromptError::AssetParse("tactics: no [[tactic]] tables".into()));
    }
    let mut seen = BTreeSet::new();
    for card in &base.cards {
        card.validate()?;
        if !seen.insert(card.name.trim().to_lowercase()) {
            return Err(PromptError::AssetParse(format!("duplicate tactic {:?}", card.name)));
        }
    }
    Ok(base)
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        "(none)".into()
    } else {
        items.join(", ")
    }
}

pub fn render_tactic(card: &TacticCard) -> String {
    format!(
        "Name: {}\nKey buildings: {}\nKey technologies: {}\nKey forces: {}\nKey timing: {}\nApplicable situation: {}\n",
        card.name,
        list(&card.key_buildings),
        list(&card.key_technologies),
        list(&card.key_forces),
        card.key_timing.trim(),
        card.applicable_situation.trim(),
    )
}

/// Preamble, every card, then the selection instructions; blank lines between.
pub fn render_etp_block(base: &TacticBase) -> String {
    let mut out = String::new();
    out.push_str(base.preamble.trim());
    out.push_str("\n\n");
    for card in &base.cards {
        out.push_str(&render_tactic(card));
        out.push('\n');
    }
    out.push_str(base.selection.trim());
    out.push('\n');
    out
}
