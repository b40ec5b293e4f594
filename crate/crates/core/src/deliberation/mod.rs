//! Deliberation: discourse obligations, intentions in three priority bands,
//! and the choice of the next intention.

mod intentions;
mod obligations;

pub use intentions::{
    expressed_goal, generate_intentions, obligation_goal, on_plan_failure, preference, select_intention,
    AdoptedVia, Band, GlobalCommitment, Intention, IntentionKind, IntentionLedger, IntentionStatus,
};
pub use obligations::{
    clarification_content, content_achieved, default_discourse_rules, derive_obligations, discharges,
    load_discourse_rules, Bearer, Obligation, ObligationKind, ObligationLedger, ObligationRule,
    ObligationUpdate, CLARIFYING_ACTS,
};
