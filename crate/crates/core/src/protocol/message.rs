use crate::idset::IdSet;
use std::sync::Arc;

/// How a sender's task list travels on the wire.
#[derive(Clone, Debug)]
pub enum TaskWire {
    /// Items removed since the sender's previous multicast.
    ///
    /// A receiver hears a given sender in an unbroken run of multicasts
    /// starting at the first phase (senders only ever drop receivers), so
    /// applying each delta once is the same as intersecting with the full
    /// list.
    Delta(Arc<[u32]>),
    /// The sender's list is empty.
    Cleared,
    /// Complete snapshot of the sender's list.
    Full(Arc<IdSet>),
}

#[derive(Clone, Debug)]
pub struct Lists {
    /// Per-sender multicast counter, starting at 1.
    pub seq: u32,
    pub tasks: TaskWire,
    pub processors: Arc<IdSet>,
    pub busy: Arc<IdSet>,
}

/// One envelope of the generic algorithm; a `Stop` and the lists may share
/// an envelope.
#[derive(Clone, Debug)]
pub struct GenericMsg {
    pub lists: Option<Arc<Lists>>,
    pub stop: bool,
}

/// Encoding used for task lists in messages.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireMode {
    #[default]
    Delta,
    Full,
}
