use serde::{Deserialize, Serialize};

use crate::corpus::{Edit, EditOp, Mention};

/// A rule's suggested edit to one mention, identified by a hash of its content.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditProposal {
    pub id: String,
    pub rule_id: String,
    pub target: Mention,
    pub operation: EditOp,
}

impl EditProposal {
    pub fn new(rule_id: &str, target: Mention, operation: EditOp) -> Self {
        let id = proposal_id(rule_id, &target, &operation);
        EditProposal { id, rule_id: rule_id.to_string(), target, operation }
    }

    pub fn edit(&self) -> Edit {
        Edit { target: self.target.clone(), operation: self.operation.clone() }
    }

    /// Whether `id` matches the content, i.e. the proposal was not altered after creation.
    pub fn id_matches(&self) -> bool {
        self.id == proposal_id(&self.rule_id, &self.target, &self.operation)
    }
}

fn proposal_id(rule_id: &str, target: &Mention, op: &EditOp) -> String {
    let op = serde_json::to_string(op).expect("edit op serializes");
    crate::util::stable_id(&[
        rule_id,
        &target.doc_id,
        &target.sent_index.to_string(),
        &target.start.to_string(),
        &target.end.to_string(),
        target.etype.name(),
        &op,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target() -> Mention {
        Mention { doc_id: "d".into(), sent_index: 2, start: 0, end: 2, etype: "GPE".into(), surface: "the US".into() }
    }

    #[test]
    fn id_is_deterministic_and_content_sensitive() {
        let a = EditProposal::new("leading_determiner", target(), EditOp::shrink_left(1));
        let b = EditProposal::new("leading_determiner", target(), EditOp::shrink_left(1));
        assert_eq!(a.id, b.id);
        assert!(a.id_matches());
        let c = EditProposal::new("leading_determiner", target(), EditOp::Delete);
        assert_ne!(a.id, c.id);
    }

    #[test]
    fn wire_shape() {
        let p = EditProposal::new("leading_determiner", target(), EditOp::shrink_left(1));
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["operation"], serde_json::json!({"op": "shrink", "left": 1, "right": 0}));
        assert_eq!(v["target"]["etype"], "GPE");
        let back: EditProposal = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }
}
