//! JSON serialization of event-order graphs with named literals.
//!
//! On disk, guard and selector literals are strings (`"s_x_4_1"`, `"g2"`);
//! loading interns each distinct name as a fresh positive literal and returns
//! the table, so tests can pin graphs and expected refutations by name
//! without caring which solver variables they map to.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use satcore::{Lit, Var};

use super::{Eog, EogEvent, RfEdge};
use crate::frontend::Access;

#[derive(Debug, Error)]
pub enum EogJsonError {
    #[error("malformed event-order graph JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("event {0}: access must be \"R\" or \"W\"")]
    BadAccess(usize),
}

/// Bidirectional literal-name table built while loading.
#[derive(Clone, Debug, Default)]
pub struct NameTable {
    by_name: HashMap<String, Lit>,
    names: Vec<String>,
}

impl NameTable {
    /// Returns the literal for `name`, interning a fresh positive literal on
    /// first sight.
    pub fn intern(&mut self, name: &str) -> Lit {
        if let Some(&l) = self.by_name.get(name) {
            return l;
        }
        let l = Lit::positive(Var::from_index(self.names.len() as u32));
        self.by_name.insert(name.to_string(), l);
        self.names.push(name.to_string());
        l
    }

    pub fn lit(&self, name: &str) -> Option<Lit> {
        self.by_name.get(name).copied()
    }

    /// Name of a literal's variable, if interned here.
    pub fn name(&self, lit: Lit) -> Option<&str> {
        self.names
            .get(lit.var().index() as usize)
            .map(String::as_str)
    }

    /// Renders a literal as its name, `!`-prefixed when negative.
    pub fn render(&self, lit: Lit) -> String {
        let base = self.name(lit).unwrap_or("?").to_string();
        if lit.is_positive() {
            base
        } else {
            format!("!{base}")
        }
    }

    /// Renders a clause as sorted `!name` / `name` strings.
    pub fn render_clause(&self, clause: &[Lit]) -> Vec<String> {
        clause.iter().map(|&l| self.render(l)).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct EventJson {
    label: String,
    var: usize,
    access: String,
    #[serde(default)]
    thread: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    guard: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RfJson {
    writer: usize,
    reader: usize,
    sel: String,
}

#[derive(Serialize, Deserialize)]
struct EogJson {
    events: Vec<EventJson>,
    po: Vec<(usize, usize)>,
    rf: Vec<RfJson>,
}

/// Loads a graph, interning literal names in order of first appearance.
pub fn from_json(text: &str) -> Result<(Eog, NameTable), EogJsonError> {
    let raw: EogJson = serde_json::from_str(text)?;
    let mut table = NameTable::default();
    let mut events = Vec::with_capacity(raw.events.len());
    for (i, e) in raw.events.into_iter().enumerate() {
        let access = match e.access.as_str() {
            "R" => Access::Read,
            "W" => Access::Write,
            _ => return Err(EogJsonError::BadAccess(i)),
        };
        events.push(EogEvent {
            label: e.label,
            var: e.var,
            access,
            thread: e.thread,
            guard: e.guard.map(|g| table.intern(&g)),
        });
    }
    let rf = raw
        .rf
        .into_iter()
        .map(|e| RfEdge {
            writer: e.writer,
            reader: e.reader,
            sel: table.intern(&e.sel),
        })
        .collect();
    Ok((
        Eog {
            events,
            po: raw.po,
            rf,
        },
        table,
    ))
}

/// Serializes a graph, naming literals through `name_of`.
pub fn to_json(eog: &Eog, name_of: impl Fn(Lit) -> String) -> String {
    let raw = EogJson {
        events: eog
            .events
            .iter()
            .map(|e| EventJson {
                label: e.label.clone(),
                var: e.var,
                access: match e.access {
                    Access::Read => "R".to_string(),
                    Access::Write => "W".to_string(),
                },
                thread: e.thread,
                guard: e.guard.map(&name_of),
            })
            .collect(),
        po: eog.po.clone(),
        rf: eog
            .rf
            .iter()
            .map(|e| RfJson {
                writer: e.writer,
                reader: e.reader,
                sel: name_of(e.sel),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("event-order graphs serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "events": [
            {"label": "x1", "var": 0, "access": "W"},
            {"label": "x2", "var": 0, "access": "R", "thread": 1, "guard": "g0"}
        ],
        "po": [[0, 1]],
        "rf": [{"writer": 0, "reader": 1, "sel": "s_x_2_1"}]
    }"#;

    #[test]
    fn load_interns_names_in_order() {
        let (eog, table) = from_json(SAMPLE).unwrap();
        eog.validate().unwrap();
        assert_eq!(eog.events.len(), 2);
        assert_eq!(eog.events[1].guard, Some(table.lit("g0").unwrap()));
        assert_eq!(eog.rf[0].sel, table.lit("s_x_2_1").unwrap());
        assert_eq!(table.render(!eog.rf[0].sel), "!s_x_2_1");
    }

    #[test]
    fn roundtrip_preserves_structure() {
        let (eog, table) = from_json(SAMPLE).unwrap();
        let text = to_json(&eog, |l| table.name(l).unwrap().to_string());
        let (again, _) = from_json(&text).unwrap();
        assert_eq!(again.events.len(), eog.events.len());
        assert_eq!(again.po, eog.po);
        assert_eq!(again.events[1].label, "x2");
        assert_eq!(again.rf.len(), 1);
    }
}
