#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use acouforge::api::{router, AppState};
use acouforge::store::Store;
use acouforge_core::design::{to_document, VoxelGrid};
use acouforge_core::FilterDesign;
use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use tower::ServiceExt;

pub fn app(store: &Path) -> Router {
    router(AppState::new(Store::open(store).unwrap()))
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.text()))
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

pub async fn call(app: &Router, method: Method, uri: &str, body: impl Into<String>) -> Reply {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .body(Body::from(body.into()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    Reply {
        status,
        headers,
        body,
    }
}

pub async fn post_design(app: &Router, design: &FilterDesign) -> String {
    let r = call(app, Method::POST, "/designs", to_document(design)).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    r.json()["id"].as_str().unwrap().to_owned()
}

pub fn acouforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acouforge"))
        .args(args)
        .env_remove("ACOUFORGE_STORE")
        .output()
        .unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// 1 cm cells joined along x: one rigid mode and one at √(2k/m).
pub fn two_cells() -> VoxelGrid {
    let mut g = VoxelGrid::empty([2, 1, 1], 0.01, [0.0; 3]);
    g.set([0, 0, 0], true);
    g.set([1, 0, 0], true);
    g
}

/// A solid L of eight cells with several distinct modes.
pub fn small_block() -> VoxelGrid {
    let mut g = VoxelGrid::empty([3, 3, 1], 0.01, [0.0; 3]);
    for c in [
        [0, 0, 0],
        [1, 0, 0],
        [2, 0, 0],
        [0, 1, 0],
        [1, 1, 0],
        [0, 2, 0],
        [1, 2, 0],
        [2, 2, 0],
    ] {
        g.set(c, true);
    }
    g
}
