use std::fmt;

use serde::{Deserialize, Serialize};

/// One of the two arms available to a user. Arm -1 pays zero; arm +1 pays
/// `x * theta + z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Minus,
    Plus,
}

impl Arm {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Arm::Minus => -1.0,
            Arm::Plus => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Arm::Minus => -1,
            Arm::Plus => 1,
        }
    }
}

/// The recommender's message. Binary policies never send `Fence`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Message {
    Minus,
    /// "On the fence": both arms are predicted to pay about the same.
    Fence,
    Plus,
}

impl Message {
    pub fn as_i8(self) -> i8 {
        match self {
            Message::Minus => -1,
            Message::Fence => 0,
            Message::Plus => 1,
        }
    }

    /// The arm this message recommends, if any.
    pub fn arm(self) -> Option<Arm> {
        match self {
            Message::Minus => Some(Arm::Minus),
            Message::Fence => None,
            Message::Plus => Some(Arm::Plus),
        }
    }
}

impl From<Arm> for Message {
    fn from(arm: Arm) -> Self {
        match arm {
            Arm::Minus => Message::Minus,
            Arm::Plus => Message::Plus,
        }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}
