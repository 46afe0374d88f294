//! Wire-protocol tests against a canned in-process HTTP server.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::thread::JoinHandle;

use ellmpeg::agent::{
    complete_with_retry, ChatClient, ChatError, ChatMessage, ChatRequest, HttpChatClient,
    RetryPolicy,
};
use ellmpeg::retrieval::{EmbeddingProvider, HttpEmbedder, RetrievalError};

/// Serves one canned response per queued entry, then shuts down. Returns
/// the endpoint URL and a handle yielding the raw request bodies seen.
fn canned_server(responses: Vec<(u16, String)>) -> (String, JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("http://{}/", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            let request = loop {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                let text = String::from_utf8_lossy(&buf);
                if let Some(header_end) = text.find("\r\n\r\n") {
                    let content_length = text
                        .lines()
                        .find_map(|l| l.to_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                        .unwrap_or(0);
                    if buf.len() >= header_end + 4 + content_length {
                        break String::from_utf8_lossy(&buf[header_end + 4..]).into_owned();
                    }
                }
                if n == 0 {
                    break String::new();
                }
            };
            bodies.push(request);
            let reason = if status == 200 { "OK" } else { "Error" };
            let response = format!(
                "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(response.as_bytes()).unwrap();
        }
        bodies
    });
    (endpoint, handle)
}

fn chat_request(text: &str) -> ChatRequest {
    ChatRequest {
        messages: vec![ChatMessage::user(text)],
        temperature: 0.0,
        max_tokens: 256,
    }
}

#[test]
fn chat_client_round_trip_with_usage() {
    let body = serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": "ffmpeg -i in.mp4 out.mp4"}}],
        "usage": {"prompt_tokens": 21, "completion_tokens": 9}
    });
    let (endpoint, server) = canned_server(vec![(200, body.to_string())]);
    let client = HttpChatClient::new(&endpoint, "test-model");
    let completion = client.complete(&chat_request("rotate a video")).unwrap();
    assert_eq!(completion.text, "ffmpeg -i in.mp4 out.mp4");
    assert_eq!(completion.prompt_tokens, Some(21));
    assert_eq!(completion.completion_tokens, Some(9));
    assert!(completion.latency_secs > 0.0);

    let bodies = server.join().unwrap();
    let sent: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(sent["model"], "test-model");
    assert_eq!(sent["messages"][0]["role"], "user");
    assert_eq!(sent["messages"][0]["content"], "rotate a video");
    assert_eq!(sent["temperature"], 0.0);
    assert_eq!(sent["max_tokens"], 256);
}

#[test]
fn chat_client_missing_usage_yields_none() {
    let body = serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": "hello"}}]
    });
    let (endpoint, server) = canned_server(vec![(200, body.to_string())]);
    let client = HttpChatClient::new(&endpoint, "m");
    let completion = client.complete(&chat_request("q")).unwrap();
    assert_eq!(completion.prompt_tokens, None);
    assert_eq!(completion.completion_tokens, None);
    server.join().unwrap();
}

#[test]
fn chat_retry_recovers_from_server_error() {
    let ok = serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": "recovered"}}]
    });
    let (endpoint, server) = canned_server(vec![
        (500, "{}".to_string()),
        (200, ok.to_string()),
    ]);
    let client = HttpChatClient::new(&endpoint, "m");
    let policy = RetryPolicy {
        max_retries: 2,
        backoff_ms: 1,
    };
    let completion = complete_with_retry(&client, &chat_request("q"), policy).unwrap();
    assert_eq!(completion.text, "recovered");
    assert_eq!(server.join().unwrap().len(), 2);
}

#[test]
fn chat_persistent_failure_reports_attempts() {
    let (endpoint, server) = canned_server(vec![
        (500, "{}".to_string()),
        (500, "{}".to_string()),
        (500, "{}".to_string()),
    ]);
    let client = HttpChatClient::new(&endpoint, "m");
    let policy = RetryPolicy {
        max_retries: 2,
        backoff_ms: 1,
    };
    let err = complete_with_retry(&client, &chat_request("q"), policy).unwrap_err();
    assert!(matches!(err, ChatError::Transport { attempts: 3, .. }));
    server.join().unwrap();
}

#[test]
fn embedder_round_trip_and_batch_order() {
    let body = serde_json::json!({
        "embeddings": [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]
    });
    let (endpoint, server) = canned_server(vec![(200, body.to_string())]);
    let embedder = HttpEmbedder::new(&endpoint, "bge-test", 4);
    let vectors = embedder.embed_batch(&["first text", "second text"]).unwrap();
    assert_eq!(vectors.len(), 2);
    assert_eq!(vectors[0].0, vec![1.0, 0.0, 0.0, 0.0]);
    assert_eq!(vectors[1].0, vec![0.0, 1.0, 0.0, 0.0]);

    let bodies = server.join().unwrap();
    let sent: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(sent["model"], "bge-test");
    assert_eq!(sent["input"][0], "first text");
    assert_eq!(sent["input"][1], "second text");
}

#[test]
fn embedder_retries_transient_errors_internally() {
    let ok = serde_json::json!({"embeddings": [[0.5, 0.5]]});
    let (endpoint, server) = canned_server(vec![
        (500, "{}".to_string()),
        (200, ok.to_string()),
    ]);
    let embedder = HttpEmbedder::new(&endpoint, "m", 2);
    let v = embedder.embed("text").unwrap();
    assert_eq!(v.0, vec![0.5, 0.5]);
    assert_eq!(server.join().unwrap().len(), 2);
}

#[test]
fn embedder_rejects_wrong_dimension() {
    let body = serde_json::json!({"embeddings": [[1.0, 2.0, 3.0]]});
    let (endpoint, server) = canned_server(vec![(200, body.to_string())]);
    let embedder = HttpEmbedder::new(&endpoint, "m", 4);
    assert!(matches!(
        embedder.embed("text"),
        Err(RetrievalError::DimensionMismatch { .. })
    ));
    server.join().unwrap();
}
