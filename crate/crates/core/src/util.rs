use std::collections::{HashMap, HashSet};
use std::hash::BuildHasherDefault;

// Std's default per-process-random hasher would make float accumulation
// orders (and hence emitted artifact bytes) vary between runs; a fixed
// hasher keeps identical inputs bit-identical.
pub(crate) type DetHashMap<K, V> =
    HashMap<K, V, BuildHasherDefault<std::collections::hash_map::DefaultHasher>>;
pub(crate) type DetHashSet<K> =
    HashSet<K, BuildHasherDefault<std::collections::hash_map::DefaultHasher>>;
