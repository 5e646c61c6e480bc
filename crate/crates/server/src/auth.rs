//! Pseudonymous sessions and the per-route role table.

use std::collections::HashMap;
use std::sync::RwLock;

use axum::extract::{MatchedPath, Request, State};
use axum::http::{header, Method};
use axum::middleware::Next;
use axum::response::{IntoResponse, Response};
use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::AppState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Student,
    Instructor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub pseudonym: String,
    pub role: Role,
    pub expires_at: DateTime<Utc>,
}

/// One row of the gating table: who may call a route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteRule {
    pub method: &'static str,
    pub path: &'static str,
    /// Empty means the route needs no session.
    pub allowed: &'static [Role],
}

const BOTH: &[Role] = &[Role::Student, Role::Instructor];
const INSTRUCTOR: &[Role] = &[Role::Instructor];
const STUDENT: &[Role] = &[Role::Student];

/// Every route the service exposes. The middleware enforces exactly this
/// table; a route missing from it is refused.
pub const GATING_TABLE: &[RouteRule] = &[
    RouteRule { method: "POST", path: "/auth/session", allowed: &[] },
    RouteRule { method: "GET", path: "/videos", allowed: BOTH },
    RouteRule { method: "POST", path: "/videos", allowed: INSTRUCTOR },
    RouteRule { method: "GET", path: "/videos/{id}", allowed: BOTH },
    RouteRule { method: "GET", path: "/videos/{id}/graph", allowed: BOTH },
    RouteRule { method: "POST", path: "/videos/{id}/feedback", allowed: STUDENT },
    RouteRule { method: "GET", path: "/videos/{id}/dashboard", allowed: INSTRUCTOR },
    RouteRule { method: "GET", path: "/videos/{id}/comments", allowed: BOTH },
];

pub fn rule_for(method: &Method, path: &str) -> Option<&'static RouteRule> {
    GATING_TABLE
        .iter()
        .find(|r| r.method == method.as_str() && r.path == path)
}

#[derive(Default)]
pub struct Sessions {
    by_token: RwLock<HashMap<String, Session>>,
}

impl Sessions {
    pub fn create(&self, pseudonym: String, role: Role, ttl: Duration) -> Session {
        let session = Session {
            token: uuid::Uuid::new_v4().simple().to_string(),
            pseudonym,
            role,
            expires_at: Utc::now() + ttl,
        };
        self.by_token
            .write()
            .expect("session lock")
            .insert(session.token.clone(), session.clone());
        session
    }

    pub fn lookup(&self, token: &str) -> Option<Session> {
        let s = self.by_token.read().expect("session lock").get(token).cloned()?;
        (s.expires_at > Utc::now()).then_some(s)
    }
}

fn bearer(req: &Request) -> Option<&str> {
    req.headers()
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
}

/// Resolves the session and checks it against [`GATING_TABLE`]. The session
/// is handed to handlers as a request extension.
pub async fn gate(State(state): State<AppState>, path: MatchedPath, mut req: Request, next: Next) -> Response {
    let Some(rule) = rule_for(req.method(), path.as_str()) else {
        return ApiError::Forbidden.into_response();
    };
    if rule.allowed.is_empty() {
        return next.run(req).await;
    }
    let Some(session) = bearer(&req).and_then(|t| state.sessions.lookup(t)) else {
        return ApiError::Unauthorized.into_response();
    };
    if !rule.allowed.contains(&session.role) {
        return ApiError::Forbidden.into_response();
    }
    req.extensions_mut().insert(session);
    next.run(req).await
}
