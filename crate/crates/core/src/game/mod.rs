//! Value-function abstraction, coalition masks, the masked-image game and the
//! memoizing evaluation layer.

mod cache;
mod image_game;
mod mask;
mod value;

pub use cache::{cached_evaluate, EvalCache, EvalCounter, EvalStats};
pub use image_game::{make_masked_image_game, BaselineMode, MaskedImageGame};
pub use mask::CoalitionMask;
pub use value::{check_arity, FnGame, TableGame, ValueFunction, TABLE_GAME_MAX_FEATURES};
