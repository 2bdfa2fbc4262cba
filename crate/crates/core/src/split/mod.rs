//! Split inference between a client holding the frontal and rear parts of a
//! network and a provider holding only the middle part, plus the attacks a
//! curious provider can mount.

mod attacks;
mod session;
pub mod wire;

pub use attacks::{
    attack_generic_retrain, attack_swapped_layer, attack_targeted_retrain, evaluate_attacks, splice,
    mean_similarity, AttackKind, AttackNets, AttackReport, AttackResults, MeanSimilarity, SpliceDepth,
};
pub use session::{ClientEnds, MiddleService, Session, SessionStep};
pub use wire::{ErrorCode, Hello, Message, MessageKind};
