//! Small hand-checkable corpora.

use crate::corpus::{Community, Corpus, TaggedItem};

/// Six items, two communities, and the classic "jasmine" ambiguity: the
/// flower sense lives in a large community, the pet sense in a small one,
/// and two items belong to no community at all.
pub fn mini_jasmine() -> Corpus {
    let items = vec![
        TaggedItem::new("i1", &["jasmine", "flower", "white"])
            .with_owner("u1")
            .in_communities(&["g1"]),
        TaggedItem::new("i2", &["flower", "rose"])
            .with_owner("u2")
            .in_communities(&["g1"]),
        TaggedItem::new("i3", &["jasmine", "garden"])
            .with_owner("u1")
            .in_communities(&["g1"]),
        TaggedItem::new("i4", &["jasmine", "dog"])
            .with_owner("u3")
            .in_communities(&["g2"]),
        TaggedItem::new("i5", &["jasmine", "girl"]).with_owner("u4"),
        TaggedItem::new("i6", &["tea", "jasmine"]).with_owner("u5"),
    ];
    let communities = vec![
        Community::new("g1", "Flowers", 100).with_items(&["i1", "i2", "i3"]),
        Community::new("g2", "Pets", 5).with_items(&["i4"]),
    ];
    Corpus::from_parts(items, communities).expect("fixture ids are unique")
}
