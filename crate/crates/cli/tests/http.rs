mod common;

use std::time::{Duration, Instant};

use acouforge::store::Store;
use acouforge_core::design::{from_document, to_document};
use acouforge_core::optimize::{RefineConfig, SearchConfig, TargetSpec};
use acouforge_core::{FilterDesign, FrequencyGrid, Primitive};
use axum::http::{Method, StatusCode};
use common::{app, call, post_design};
use serde_json::json;

#[tokio::test]
async fn health() {
    let dir = tempfile::tempdir().unwrap();
    let r = call(&app(dir.path()), Method::GET, "/health", "").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json(), json!({ "status": "ok" }));
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    for (m, uri) in [
        (Method::GET, "/jobs/0123456789abcdef"),
        (Method::GET, "/jobs/nope/result"),
        (Method::GET, "/designs/0123456789abcdef"),
        (Method::POST, "/designs/0123456789abcdef/spectrum"),
        (Method::POST, "/modal/models/0123456789abcdef/synthesize"),
    ] {
        let r = call(&app, m, uri, "").await;
        assert_eq!(r.status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(r.json()["code"], "NOT_FOUND");
    }
    let put = call(
        &app,
        Method::PUT,
        "/designs/0123456789abcdef",
        to_document(&FilterDesign::demo()),
    )
    .await;
    assert_eq!(put.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn malformed_and_invalid_bodies() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let r = call(&app, Method::POST, "/designs", "{not json").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["code"], "MALFORMED_REQUEST");

    let mut bad = FilterDesign::demo();
    bad.chain[1] = Primitive::Chamber {
        length_m: -0.1,
        radius_m: 0.04,
    };
    let r = call(&app, Method::POST, "/designs", to_document(&bad)).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let body = r.json();
    assert_eq!(body["code"], "VALIDATION_FAILED");
    let codes: Vec<&str> = body["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["code"].as_str().unwrap())
        .collect();
    assert!(codes.contains(&"NEGATIVE_DIMENSION"), "{codes:?}");
}

#[tokio::test]
async fn designs_are_content_addressed_and_durable() {
    let dir = tempfile::tempdir().unwrap();
    let text;
    let id;
    {
        let app = app(dir.path());
        id = post_design(&app, &FilterDesign::demo()).await;
        assert_eq!(id.len(), 16);
        assert_eq!(post_design(&app, &FilterDesign::demo()).await, id);
        let r = call(&app, Method::GET, &format!("/designs/{id}"), "").await;
        assert_eq!(r.status, StatusCode::OK);
        text = r.text();
    }
    // a fresh service over the same directory
    let app = app(dir.path());
    let r = call(&app, Method::GET, &format!("/designs/{id}"), "").await;
    assert_eq!(r.text(), text);
    assert_eq!(
        from_document::<FilterDesign>(&text).unwrap(),
        FilterDesign::demo()
    );
}

#[tokio::test]
async fn corrupt_record_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let id = post_design(&app(dir.path()), &FilterDesign::demo()).await;
    std::fs::write(
        dir.path().join("designs/ffffffffffffffff.design"),
        "garbage",
    )
    .unwrap();
    let app = app(dir.path());
    assert_eq!(
        call(&app, Method::GET, &format!("/designs/{id}"), "")
            .await
            .status,
        StatusCode::OK
    );
    assert_eq!(
        call(&app, Method::GET, "/designs/ffffffffffffffff", "")
            .await
            .status,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn put_replaces_content_under_the_same_id() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = post_design(&app, &FilterDesign::demo()).await;
    let first = call(&app, Method::GET, &format!("/designs/{id}"), "")
        .await
        .headers["x-design-revision"]
        .clone();
    let mut edited = FilterDesign::demo();
    edited.chain[1] = Primitive::Chamber {
        length_m: 0.12,
        radius_m: 0.04,
    };
    let r = call(
        &app,
        Method::PUT,
        &format!("/designs/{id}"),
        to_document(&edited),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["id"], id.as_str());
    let got = call(&app, Method::GET, &format!("/designs/{id}"), "").await;
    assert_ne!(got.headers["x-design-revision"], first);
    assert_eq!(from_document::<FilterDesign>(&got.text()).unwrap(), edited);
    assert_eq!(
        Store::open(dir.path()).unwrap().design(&id).unwrap().design,
        edited
    );
}

#[tokio::test]
async fn spectrum_defaults_and_custom_grid() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = post_design(&app, &FilterDesign::demo()).await;
    let r = call(&app, Method::POST, &format!("/designs/{id}/spectrum"), "").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.headers["content-type"], "text/csv");
    assert_eq!(r.text().lines().count(), 513);
    let body = json!({ "grid": FrequencyGrid::linear(500.0, 1000.0, 11).unwrap() }).to_string();
    let r = call(&app, Method::POST, &format!("/designs/{id}/spectrum"), body).await;
    assert_eq!(r.text().lines().count(), 12);
    let r = call(
        &app,
        Method::POST,
        &format!("/designs/{id}/spectrum"),
        r#"{"grid": 3}"#,
    )
    .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn stl_export() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = post_design(&app, &FilterDesign::demo()).await;
    let body = json!({ "cell_size_m": 0.005, "wall_thickness_m": 0.005 }).to_string();
    let r = call(&app, Method::POST, &format!("/designs/{id}/stl"), body).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    let n = u32::from_le_bytes(r.body[80..84].try_into().unwrap()) as usize;
    assert_eq!(r.body.len(), 84 + 50 * n);
}

fn quick_config() -> SearchConfig {
    SearchConfig {
        seed: 3,
        max_iterations: 400,
        grid: FrequencyGrid::linear(200.0, 1200.0, 128).unwrap(),
        refine: RefineConfig {
            max_evals: 40,
            ..RefineConfig::default()
        },
        ..SearchConfig::default()
    }
}

async fn wait_for(app: &axum::Router, job: &str) -> (serde_json::Value, Vec<f64>) {
    let start = Instant::now();
    let mut progress = Vec::new();
    loop {
        let r = call(app, Method::GET, &format!("/jobs/{job}"), "").await;
        assert_eq!(r.status, StatusCode::OK);
        let j = r.json();
        progress.push(j["progress"].as_f64().unwrap());
        if j["state"] == "done" || j["state"] == "failed" {
            return (j, progress);
        }
        assert!(start.elapsed() < Duration::from_secs(60), "job stuck: {j}");
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn optimize_job_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = post_design(&app, &FilterDesign::demo()).await;
    let body = json!({ "design_id": id, "target": TargetSpec::pitches(&[72], 10.0), "config": quick_config() });
    let r = call(&app, Method::POST, "/jobs/optimize", body.to_string()).await;
    assert_eq!(r.status, StatusCode::ACCEPTED, "{}", r.text());
    let job = r.json()["job_id"].as_str().unwrap().to_owned();

    // a second job queues behind the first, so its result is not ready yet
    let r = call(&app, Method::POST, "/jobs/optimize", body.to_string()).await;
    let queued = r.json()["job_id"].as_str().unwrap().to_owned();
    let early = call(&app, Method::GET, &format!("/jobs/{queued}/result"), "").await;
    assert_eq!(early.status, StatusCode::CONFLICT);
    assert_eq!(early.json()["code"], "JOB_NOT_DONE");

    let (done, progress) = wait_for(&app, &job).await;
    assert_eq!(done["state"], "done", "{done}");
    assert!(progress.windows(2).all(|w| w[0] <= w[1]), "{progress:?}");
    assert_eq!(*progress.last().unwrap(), 1.0);
    let result = call(&app, Method::GET, &format!("/jobs/{job}/result"), "").await;
    assert_eq!(result.status, StatusCode::OK);
    let objective = result.json()["objective_value"].as_f64().unwrap();
    assert!(objective.is_finite());

    // the optimized design is in the store
    let stored = done["result_design_id"].as_str().unwrap();
    assert_eq!(
        call(&app, Method::GET, &format!("/designs/{stored}"), "")
            .await
            .status,
        StatusCode::OK
    );

    // same seed, same answer
    let (again, _) = wait_for(&app, &queued).await;
    assert_eq!(again["result_design_id"], done["result_design_id"]);
}

#[tokio::test]
async fn optimize_rejects_bad_requests() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = post_design(&app, &FilterDesign::demo()).await;
    let unknown =
        json!({ "design_id": "0123456789abcdef", "target": TargetSpec::pitches(&[72], 10.0) });
    assert_eq!(
        call(&app, Method::POST, "/jobs/optimize", unknown.to_string())
            .await
            .status,
        StatusCode::NOT_FOUND
    );
    let empty = json!({ "design_id": id, "target": TargetSpec::pitches(&[], 10.0) });
    assert_eq!(
        call(&app, Method::POST, "/jobs/optimize", empty.to_string())
            .await
            .status,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    let garbage = json!({ "design_id": id, "target": { "type": "chord" } });
    assert_eq!(
        call(&app, Method::POST, "/jobs/optimize", garbage.to_string())
            .await
            .status,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn modal_model_retune_and_synthesize() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let material = json!({ "youngs_modulus_pa": 1e6, "density_kg_per_m3": 1000.0 });
    let body = json!({ "voxels": common::two_cells(), "material": material });
    let r = call(&app, Method::POST, "/modal/models", body.to_string()).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    let summary = r.json();
    let f = summary["frequencies_hz"][1].as_f64().unwrap();
    assert!((f - 711.7625434171771).abs() < 1e-9, "{f}");
    let id = summary["id"].as_str().unwrap();

    let stiffer = json!({ "youngs_modulus_pa": 4e6, "density_kg_per_m3": 1000.0 });
    let r = call(
        &app,
        Method::POST,
        &format!("/modal/models/{id}/retune"),
        stiffer.to_string(),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    let g = r.json()["frequencies_hz"][1].as_f64().unwrap();
    assert!((g / f - 2.0).abs() <= 1e-12);

    let synth = json!({ "impact": { "node": 0, "impulse_n_s": 1e-3 }, "duration_s": 0.1 });
    let r = call(
        &app,
        Method::POST,
        &format!("/modal/models/{id}/synthesize"),
        synth.to_string(),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.headers["content-type"], "audio/wav");
    assert_eq!(&r.body[..4], b"RIFF");
    assert_eq!(r.body.len(), 44 + 2 * 4410);

    let bad_node = json!({ "impact": { "node": 9, "impulse_n_s": 1e-3 } });
    let r = call(
        &app,
        Method::POST,
        &format!("/modal/models/{id}/synthesize"),
        bad_node.to_string(),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);

    // models survive a restart too
    let app = common::app(dir.path());
    let r = call(
        &app,
        Method::POST,
        &format!("/modal/models/{id}/retune"),
        stiffer.to_string(),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
}
