//! Golden-free trust verification for gate-level hardware IP.
//!
//! The toolkit parses a suspect structural netlist into a hypergraph,
//! injects synthetic Trojans into the suspect design itself to build a
//! per-design training set, extracts functional (signal probability,
//! transition activity, SCOAP testability) and structural features for every
//! net, trains RBF-kernel SVM classifiers, and prunes the predicted Trojan
//! nets through connectivity, depth, and functional-scoping stages into a
//! reconstructed Trojan circuit.

pub mod features;
pub mod fixtures;
pub mod hypergraph;
pub mod injector;
pub mod library;
pub mod netlist;
pub mod seeding;
pub mod sim;
pub mod structural;
pub mod testability;

pub use hypergraph::{Designations, Hypergraph, HypergraphError, NetId};
pub use library::{CellLibrary, LibraryError};
pub use netlist::{emit_netlist, parse_netlist, Netlist, NetlistError};
