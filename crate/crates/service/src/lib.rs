//! Local HTTP facade over `gim-core`: registers snapshots, serves reduced
//! views for the zoom slider and records annotations.
//!
//! Everything is held in memory for the lifetime of the process. Snapshot
//! and annotation files are managed by the command-line tool.

mod error;
mod state;

use std::collections::HashMap;
use std::io;
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::{SubsecRound, Utc};
use gim_core::annotation::sort_folders;
use gim_core::ingest::{scan, snapshot_from_json, OrderedSnapshot};
use gim_core::reduction::{parse_grid, profile};
use gim_core::{
    AnnotationKind, AnnotationStatus, AnnotationStore, EffectiveKind, ReductionStrength,
    ScanOptions, SortKey, SortOrder, TreeMetrics,
};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

pub use error::ApiError;
pub use state::{Collection, Registry};

const INDEX_HTML: &str = include_str!("../assets/index.html");
const DEFAULT_GRID: &str = "0:0.01:1";
const MAX_BODY_BYTES: usize = 512 * 1024 * 1024;

pub fn router(registry: Arc<Registry>) -> Router {
    Router::new()
        .route("/", get(index))
        .route(
            "/collections",
            get(list_collections).post(create_collection),
        )
        .route("/collections/{id}/tree", get(reduced_tree))
        .route("/collections/{id}/sorted", get(sorted_view))
        .route("/collections/{id}/profile", get(strength_profile))
        .route(
            "/collections/{id}/annotations",
            get(get_annotations).put(import_annotations),
        )
        .route(
            "/collections/{id}/annotations/{*path}",
            axum::routing::put(put_annotation).delete(delete_annotation),
        )
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(registry)
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, registry: Arc<Registry>) -> io::Result<()> {
    axum::serve(listener, router(registry)).await
}

type Shared = State<Arc<Registry>>;

fn lookup(registry: &Registry, id: &str) -> Result<Arc<Collection>, ApiError> {
    registry
        .get(id)
        .ok_or_else(|| ApiError::UnknownCollection(id.to_string()))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

fn json_text(status: StatusCode, body: impl Into<String>) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        body.into(),
    )
        .into_response()
}

fn now() -> chrono::DateTime<Utc> {
    Utc::now().trunc_subsecs(0)
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

#[derive(Serialize)]
struct MetricsDto {
    folder_count: usize,
    max_depth: usize,
    total_files: u64,
    retained_file_fraction: f64,
}

impl From<TreeMetrics> for MetricsDto {
    fn from(m: TreeMetrics) -> Self {
        MetricsDto {
            folder_count: m.folder_count,
            max_depth: m.max_depth,
            total_files: m.total_files,
            retained_file_fraction: m.retained_file_fraction,
        }
    }
}

#[derive(Serialize)]
struct WarningDto {
    path: String,
    message: String,
}

#[derive(Serialize)]
struct CollectionDto {
    id: String,
    source: String,
    metrics: MetricsDto,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<WarningDto>,
}

impl CollectionDto {
    fn new(c: &Collection, warnings: Vec<WarningDto>) -> Self {
        CollectionDto {
            id: c.id().to_string(),
            source: c.snapshot().source.clone(),
            metrics: c.metrics().into(),
            warnings,
        }
    }
}

async fn list_collections(State(registry): Shared) -> Json<Vec<CollectionDto>> {
    Json(
        registry
            .list()
            .iter()
            .map(|c| CollectionDto::new(c, Vec::new()))
            .collect(),
    )
}

#[derive(Deserialize)]
struct ScanProbe {
    scan_path: Option<String>,
}

fn probe_scan_path(body: &str) -> Option<String> {
    let mut de = serde_json::Deserializer::from_str(body);
    de.disable_recursion_limit();
    ScanProbe::deserialize(&mut de).ok()?.scan_path
}

/// Body is either a snapshot document or `{"scan_path": "..."}`.
async fn create_collection(
    State(registry): Shared,
    body: String,
) -> Result<(StatusCode, Json<CollectionDto>), ApiError> {
    let (tree, warnings) = blocking(move || match probe_scan_path(&body) {
        Some(path) => {
            let report = scan(&path, &ScanOptions::default())?;
            let warnings = report
                .warnings
                .into_iter()
                .map(|w| WarningDto {
                    path: w.path.display().to_string(),
                    message: w.message,
                })
                .collect();
            Ok((report.tree, warnings))
        }
        None => Ok((snapshot_from_json(&body)?, Vec::new())),
    })
    .await?;
    let collection = registry.insert(tree);
    Ok((
        StatusCode::CREATED,
        Json(CollectionDto::new(&collection, warnings)),
    ))
}

fn parse_strength(raw: Option<&str>) -> Result<ReductionStrength, ApiError> {
    let raw = raw.ok_or_else(|| ApiError::bad_request("missing query parameter t"))?;
    let t: f64 = raw
        .trim()
        .parse()
        .map_err(|_| ApiError::bad_request(format!("t must be a number, got {raw:?}")))?;
    Ok(ReductionStrength::new(t)?)
}

async fn reduced_tree(
    State(registry): Shared,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let collection = lookup(&registry, &id)?;
    let t = parse_strength(query.get("t").map(String::as_str))?;
    let body = blocking(move || Ok(collection.reduced_json(t))).await?;
    Ok(json_text(StatusCode::OK, body.as_ref()))
}

#[derive(Serialize)]
struct CoverageDto {
    relevant_files: u64,
    excluded_files: u64,
    unmarked_files: u64,
}

#[derive(Serialize)]
struct StatusDto {
    path: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    origin: Option<String>,
}

#[derive(Serialize)]
struct SortedView<'a> {
    by: &'a str,
    order: &'a str,
    coverage: CoverageDto,
    statuses: Vec<StatusDto>,
    tree: OrderedSnapshot<'a>,
}

fn effective_label(kind: EffectiveKind) -> &'static str {
    match kind {
        EffectiveKind::Relevant => "relevant",
        EffectiveKind::Excluded => "excluded",
        EffectiveKind::Unmarked => "unmarked",
    }
}

/// Sibling-wise sorted tree plus every folder's effective status in
/// pre-order of the sorted tree.
async fn sorted_view(
    State(registry): Shared,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let collection = lookup(&registry, &id)?;
    let by = query
        .get("by")
        .map_or("accessible", String::as_str)
        .to_string();
    let order = query
        .get("order")
        .map_or("desc", String::as_str)
        .to_string();
    let key = match by.as_str() {
        "accessible" => SortKey::AccessibleFiles,
        "modified" => SortKey::ModifiedAt,
        other => return Err(ApiError::bad_request(format!("unknown sort key {other:?}"))),
    };
    let direction = match order.as_str() {
        "asc" => SortOrder::Asc,
        "desc" => SortOrder::Desc,
        other => {
            return Err(ApiError::bad_request(format!(
                "unknown sort order {other:?}"
            )))
        }
    };
    let store = collection.store();
    let body = blocking(move || {
        let sorted = sort_folders(collection.snapshot(), key, direction);
        let cov = store.coverage_summary(&sorted);
        let statuses = store
            .resolve_all(&sorted)
            .into_iter()
            .map(|(path, s)| StatusDto {
                path,
                status: effective_label(s.kind),
                origin: s.origin,
            })
            .collect();
        let view = SortedView {
            by: &by,
            order: &order,
            coverage: CoverageDto {
                relevant_files: cov.relevant_files,
                excluded_files: cov.excluded_files,
                unmarked_files: cov.unmarked_files,
            },
            statuses,
            tree: OrderedSnapshot(&sorted),
        };
        let mut text =
            serde_json::to_string_pretty(&view).map_err(|e| ApiError::Internal(e.to_string()))?;
        text.push('\n');
        Ok(text)
    })
    .await?;
    Ok(json_text(StatusCode::OK, body))
}

#[derive(Serialize)]
struct ProfileRowDto {
    t: f64,
    folder_count: usize,
    max_depth: usize,
    retained_file_fraction: f64,
    folder_reduction: f64,
}

#[derive(Serialize)]
struct ProfileDto {
    original_folder_count: usize,
    rows: Vec<ProfileRowDto>,
    /// Largest folder reduction that keeps at least half of the files.
    best: Option<ProfileRowDto>,
}

async fn strength_profile(
    State(registry): Shared,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Json<ProfileDto>, ApiError> {
    let collection = lookup(&registry, &id)?;
    let grid = parse_grid(query.get("grid").map_or(DEFAULT_GRID, String::as_str))?;
    blocking(move || {
        let p = profile(collection.snapshot(), &grid)?;
        let dto = |r: &gim_core::reduction::ProfileRow| ProfileRowDto {
            t: r.t,
            folder_count: r.folder_count,
            max_depth: r.max_depth,
            retained_file_fraction: r.retained_file_fraction,
            folder_reduction: p.folder_reduction(r),
        };
        Ok(Json(ProfileDto {
            original_folder_count: p.original_folder_count,
            rows: p.rows.iter().map(dto).collect(),
            best: p.best_tradeoff(0.5).map(dto),
        }))
    })
    .await
}

async fn get_annotations(
    State(registry): Shared,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let collection = lookup(&registry, &id)?;
    Ok(json_text(StatusCode::OK, collection.store().to_json()))
}

/// Replaces the store with a validated annotation document.
async fn import_annotations(
    State(registry): Shared,
    Path(id): Path<String>,
    body: String,
) -> Result<Response, ApiError> {
    let collection = lookup(&registry, &id)?;
    let imported = AnnotationStore::from_json(&body)?;
    let store = collection.update_store(|tree, _| {
        imported.check_against(tree)?;
        Ok::<_, ApiError>(imported)
    })?;
    Ok(json_text(StatusCode::OK, store.to_json()))
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindDto {
    Relevant,
    Excluded,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StatusBody {
    kind: KindDto,
    #[serde(default)]
    contexts: Vec<String>,
    #[serde(default)]
    note: Option<String>,
}

async fn put_annotation(
    State(registry): Shared,
    Path((id, path)): Path<(String, String)>,
    body: String,
) -> Result<Response, ApiError> {
    let collection = lookup(&registry, &id)?;
    let parsed: StatusBody = serde_json::from_str(&body).map_err(|e| ApiError::BadRequest {
        message: format!("malformed annotation body: {e}"),
        at: None,
    })?;
    let kind = match parsed.kind {
        KindDto::Relevant => AnnotationKind::Relevant,
        KindDto::Excluded => AnnotationKind::Excluded,
    };
    let status = AnnotationStatus::from_parts(kind, parsed.contexts, parsed.note)?;
    let store =
        collection.update_store(|tree, store| store.set_annotation(tree, &path, status, now()))?;
    Ok(json_text(StatusCode::OK, store.to_json()))
}

async fn delete_annotation(
    State(registry): Shared,
    Path((id, path)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let collection = lookup(&registry, &id)?;
    let store = collection.update_store(|_, store| store.clear_annotation(&path, now()))?;
    Ok(json_text(StatusCode::OK, store.to_json()))
}
