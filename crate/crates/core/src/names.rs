//! Global names and class-wise indices.
//!
//! Classes and objects are named by arbitrary naturals shared by every
//! component. Methods and fields are numbered per class, starting at 1, in
//! declaration order.

use std::fmt;

macro_rules! natural_name {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<u32> for $name {
            fn from(v: u32) -> Self {
                $name(v)
            }
        }
    };
}

natural_name!(
    /// Name of a class, which is also the name of its compartment.
    ClassName
);
natural_name!(
    /// Name of a static object.
    ObjectName
);
natural_name!(
    /// 1-based position of a method inside its class.
    MethodIndex
);
natural_name!(
    /// 1-based position of a field inside its class.
    FieldIndex
);

impl MethodIndex {
    /// Position in a 0-based vector, or `None` for the invalid index 0.
    pub fn slot(self) -> Option<usize> {
        (self.0 as usize).checked_sub(1)
    }

    pub fn from_slot(slot: usize) -> Self {
        MethodIndex(slot as u32 + 1)
    }
}

impl FieldIndex {
    pub fn slot(self) -> Option<usize> {
        (self.0 as usize).checked_sub(1)
    }

    pub fn from_slot(slot: usize) -> Self {
        FieldIndex(slot as u32 + 1)
    }
}

/// Class of the main object and of the main method.
pub const MAIN_CLASS: ClassName = ClassName(0);
/// The object passed as both `this` and `arg` to the main method.
pub const MAIN_OBJECT: ObjectName = ObjectName(0);
/// The main method is the first method of [`MAIN_CLASS`].
pub const MAIN_METHOD: MethodIndex = MethodIndex(1);
