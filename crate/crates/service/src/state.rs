use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use gim_core::reduction::reduce;
use gim_core::{AnnotationStore, FolderTree, ReductionStrength, TreeMetrics};

/// One registered snapshot with its annotation store.
pub struct Collection {
    id: String,
    snapshot: Arc<FolderTree>,
    metrics: TreeMetrics,
    store: Mutex<AnnotationStore>,
    // reduced documents keyed by slider step (t * 100)
    reductions: Mutex<HashMap<u32, Arc<str>>>,
}

impl Collection {
    fn new(id: String, snapshot: FolderTree) -> Self {
        let metrics = snapshot.metrics(None).expect("no original total given");
        let store = AnnotationStore::for_tree(&snapshot, snapshot.scanned_at);
        Collection {
            id,
            snapshot: Arc::new(snapshot),
            metrics,
            store: Mutex::new(store),
            reductions: Mutex::new(HashMap::new()),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn snapshot(&self) -> &Arc<FolderTree> {
        &self.snapshot
    }

    pub fn metrics(&self) -> TreeMetrics {
        self.metrics
    }

    pub fn store(&self) -> AnnotationStore {
        self.store.lock().unwrap().clone()
    }

    /// Runs `f` with the store locked and keeps its result on success, so
    /// mutations of one collection never interleave.
    pub fn update_store<E>(
        &self,
        f: impl FnOnce(&FolderTree, &AnnotationStore) -> Result<AnnotationStore, E>,
    ) -> Result<AnnotationStore, E> {
        let mut guard = self.store.lock().unwrap();
        let next = f(&self.snapshot, &guard)?;
        *guard = next.clone();
        Ok(next)
    }

    /// Reduced document for `t`. Values on the 1/100 slider grid are cached.
    pub fn reduced_json(&self, t: ReductionStrength) -> Arc<str> {
        let on_grid = t.quantized() == t;
        if on_grid {
            if let Some(hit) = self.reductions.lock().unwrap().get(&t.step()) {
                return hit.clone();
            }
        }
        let body: Arc<str> = reduce(&self.snapshot, t).to_json().into();
        if on_grid {
            self.reductions
                .lock()
                .unwrap()
                .entry(t.step())
                .or_insert_with(|| body.clone());
        }
        body
    }
}

#[derive(Default)]
pub struct Registry {
    collections: RwLock<HashMap<String, Arc<Collection>>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&self, snapshot: FolderTree) -> Arc<Collection> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let collection = Arc::new(Collection::new(id.clone(), snapshot));
        self.collections
            .write()
            .unwrap()
            .insert(id, collection.clone());
        collection
    }

    pub fn get(&self, id: &str) -> Option<Arc<Collection>> {
        self.collections.read().unwrap().get(id).cloned()
    }

    /// All collections, by id.
    pub fn list(&self) -> Vec<Arc<Collection>> {
        let mut all: Vec<_> = self.collections.read().unwrap().values().cloned().collect();
        all.sort_by(|a, b| a.id.cmp(&b.id));
        all
    }
}
