use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;
use std::thread;

use scorepoint::judge::{HttpJudge, Judge, JudgeConfig, JudgeError, JudgeRequest};

struct Captured {
    headers: Vec<String>,
    body: serde_json::Value,
}

fn read_request(stream: &mut TcpStream) -> Captured {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut headers = Vec::new();
    let mut len = 0;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let line = line.trim_end().to_owned();
        if line.is_empty() {
            break;
        }
        if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            len = v.trim().parse().unwrap();
        }
        headers.push(line);
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).unwrap();
    Captured { headers, body: serde_json::from_slice(&body).unwrap() }
}

/// Serves one canned `(status, body)` per connection, in order.
fn serve(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<Captured>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in replies {
            let (mut stream, _) = listener.accept().unwrap();
            let captured = read_request(&mut stream);
            let _ = tx.send(captured);
            let head = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n",
                body.len()
            );
            stream.write_all(head.as_bytes()).unwrap();
            stream.write_all(body.as_bytes()).unwrap();
        }
    });
    (url, rx)
}

fn ok_body(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

fn config(url: &str) -> JudgeConfig {
    JudgeConfig {
        endpoint_url: url.to_owned(),
        model_name: "judge-x".into(),
        temperature: 0.5,
        max_retries: 2,
        timeout_secs: 5.0,
        api_key_env: "SCOREPOINT_TEST_UNSET_KEY".into(),
        backoff_base_ms: 1,
        ..JudgeConfig::default()
    }
}

fn req() -> JudgeRequest {
    JudgeRequest::new("wpa", "judge this").unwrap()
}

#[test]
fn posts_chat_completion_and_reads_first_choice() {
    let (url, rx) = serve(vec![(200, ok_body("the answer"))]);
    let judge = HttpJudge::new(config(&url)).unwrap();
    assert_eq!(judge.complete(&req()).unwrap(), "the answer");
    let got = rx.recv().unwrap();
    assert_eq!(got.body["model"], "judge-x");
    assert_eq!(got.body["temperature"], 0.5);
    assert_eq!(got.body["messages"], serde_json::json!([{"role": "user", "content": "judge this"}]));
    assert!(got.headers[0].starts_with("POST /v1/chat/completions"));
    // No key in the environment, so no Authorization header.
    assert!(!got.headers.iter().any(|h| h.to_ascii_lowercase().starts_with("authorization")));
}

#[test]
fn server_errors_are_retried() {
    let (url, rx) = serve(vec![(503, "busy".into()), (500, "oops".into()), (200, ok_body("late"))]);
    let judge = HttpJudge::new(config(&url)).unwrap();
    assert_eq!(judge.complete(&req()).unwrap(), "late");
    assert_eq!(rx.try_iter().count(), 3);
}

#[test]
fn retries_are_bounded() {
    let (url, _rx) = serve(vec![(502, "a".into()), (502, "b".into()), (502, "c".into())]);
    let judge = HttpJudge::new(config(&url)).unwrap();
    match judge.complete(&req()) {
        Err(JudgeError::Status { status: 502, body_excerpt }) => assert_eq!(body_excerpt, "c"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn client_errors_are_not_retried() {
    let (url, rx) = serve(vec![(401, r#"{"error":"bad key"}"#.into()), (200, ok_body("never"))]);
    let judge = HttpJudge::new(config(&url)).unwrap();
    let err = judge.complete(&req()).unwrap_err();
    assert!(matches!(err, JudgeError::Status { status: 401, .. }), "{err}");
    assert_eq!(rx.recv().unwrap().body["model"], "judge-x");
    assert!(rx.recv_timeout(std::time::Duration::from_millis(100)).is_err());
}

#[test]
fn malformed_envelope_is_a_protocol_error() {
    let (url, _rx) = serve(vec![(200, r#"{"choices": []}"#.into())]);
    let judge = HttpJudge::new(config(&url)).unwrap();
    assert!(matches!(judge.complete(&req()), Err(JudgeError::Protocol(_))));
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    // Bind then drop to obtain a port with nothing listening.
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let judge = HttpJudge::new(config(&format!("http://127.0.0.1:{port}/v1"))).unwrap();
    match judge.complete(&req()) {
        Err(JudgeError::Transport { attempts, .. }) => assert_eq!(attempts, 3),
        other => panic!("unexpected {other:?}"),
    }
}
