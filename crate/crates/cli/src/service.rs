//! HTTP planning service.
//!
//! Serves plans behind the complexity router. Requests on the fast path
//! skip the probe and the planner entirely; complex requests run the full
//! probe, diagnose, plan, execute chain. All state is immutable after
//! startup, so concurrent requests share it freely.

use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use easp_core::diagnosis::{diagnose, Diagnosis, DiagnosisConfig};
use easp_core::executor::execute_plan;
use easp_core::planning::{extract_context, student_sample, Plan, PolicyParams, Provenance};
use easp_core::retrieval::{probe, Index, RankParams, RelTarget};
use easp_core::routing::{route, RoutePath, RouterParams};
use easp_core::world::KnowledgeBase;
use easp_core::PipelineConfig;

const MAX_QUERY_CHARS: usize = 512;

pub struct ServeState {
    pub index: Index,
    pub kb: KnowledgeBase,
    pub policy: PolicyParams,
    pub router: RouterParams,
    pub cfg: PipelineConfig,
}

#[derive(Debug, Deserialize)]
pub struct PlanRequest {
    pub query: String,
}

#[derive(Debug, Serialize)]
pub struct PlanResponse {
    pub path: &'static str,
    pub diagnosis: Option<Diagnosis>,
    pub plan: Plan,
    pub items: Vec<String>,
    pub latency_ms: f64,
    pub cost: u64,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

fn error_response(status: StatusCode, message: impl Into<String>) -> Response {
    (
        status,
        Json(ErrorBody {
            error: message.into(),
        }),
    )
        .into_response()
}

async fn plan_handler(
    State(state): State<Arc<ServeState>>,
    payload: Result<Json<PlanRequest>, JsonRejection>,
) -> Response {
    let Json(request) = match payload {
        Ok(p) => p,
        Err(rejection) => {
            return error_response(StatusCode::BAD_REQUEST, rejection.body_text());
        }
    };
    if request.query.chars().count() > MAX_QUERY_CHARS {
        return error_response(
            StatusCode::PAYLOAD_TOO_LARGE,
            format!("query exceeds {MAX_QUERY_CHARS} characters"),
        );
    }
    let start = Instant::now();
    let cfg = &state.cfg;
    let rank = RankParams {
        tau_rel: cfg.tau_rel,
        price_scale: cfg.price_scale,
        pool_multiple: cfg.pool_multiple,
    };
    let decision = route(&request.query, &state.router, &state.kb, &state.index);
    let mut cost = 0u64;

    let (path, diagnosis, plan) = match decision.path {
        RoutePath::FastPath => (
            "fast",
            None,
            Plan::identity(&request.query, Provenance::Identity),
        ),
        RoutePath::ComplexPath => {
            let snapshot = probe(&state.index, &request.query, cfg.k_probe);
            cost += snapshot.cost.total();
            let d = diagnose(&request.query, &snapshot, &state.kb, &DiagnosisConfig::from(cfg));
            let ctx = extract_context(&request.query, &snapshot, &d, &state.kb, &state.index);
            // Serving is deterministic: temperature zero.
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
            let plan = match student_sample(&state.policy, &ctx, &state.kb, 0.0, cfg.n_max, &mut rng)
            {
                Ok((plan, _)) => plan,
                Err(e) => {
                    return error_response(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
                }
            };
            ("complex", Some(d), plan)
        }
    };

    let target = RelTarget::Text(&request.query);
    let result = execute_plan(&state.index, &plan, target, cfg.k, &rank);
    cost += result.cost.total();
    let response = PlanResponse {
        path,
        diagnosis,
        plan,
        items: result.items.iter().map(|s| s.item.id.clone()).collect(),
        latency_ms: start.elapsed().as_secs_f64() * 1e3,
        cost,
    };
    (StatusCode::OK, Json(response)).into_response()
}

async fn healthz() -> Response {
    (
        StatusCode::OK,
        Json(serde_json::json!({ "version": env!("CARGO_PKG_VERSION") })),
    )
        .into_response()
}

pub fn app(state: Arc<ServeState>) -> Router {
    Router::new()
        .route("/plan", post(plan_handler))
        .route("/healthz", get(healthz))
        .with_state(state)
}
