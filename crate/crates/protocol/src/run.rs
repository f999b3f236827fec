//! The federation driver: wires server and client roles over in-memory or
//! TCP channels, runs the synchronous per-user schedule, and collects
//! results, metrics, and optional recordings.
//!
//! Rounds are fully synchronous: the server serves each user in ascending id
//! order and applies each upload immediately, so a user always downloads the
//! profiles left by the previous user. Client computations run in their own
//! threads but their uploads are applied serially in user order; messages
//! are immutable values, and the single driver thread owns the assembly.

use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Instant;

use fedmf_core::{
    loss, PayloadMode, PayloadRule, ProfileMatrix, RatingTable, Scalar, TrainConfig, Transcript,
    TranscriptRound,
};

use crate::channel::{mem_duplex, tcp_duplex, Endpoint};
use crate::client::ClientState;
use crate::error::{ProtocolError, Result};
use crate::keys::{distribute_keys_from_holder, parse_pubkey, receive_keys};
use crate::server::{server_init, ServerState};
use crate::wire::{decode_frame, Body};

/// Whether gradients travel in the clear or as ciphertext.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Plaintext,
    Encrypted,
}

/// Which transport carries the frames. Both yield identical numerical
/// results for identical seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    InMemory,
    Tcp,
}

/// Federation run options.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: Mode,
    pub payload_mode: PayloadMode,
    pub rule: PayloadRule,
    pub transport: Transport,
    /// Paillier modulus bits (encrypted mode).
    pub key_bits: u32,
    /// Fixed-point exponent shared by every party (encrypted mode).
    pub exponent: i64,
    /// Record a transcript of snapshots and uploads (plaintext mode only).
    pub record_transcript: bool,
    /// Compute the per-round loss trace (adds evaluation-side decryption).
    pub record_loss: bool,
    /// Capture every byte crossing the server's endpoints (tests).
    pub capture_server_bytes: bool,
}

impl RunOptions {
    pub fn plaintext() -> Self {
        Self {
            mode: Mode::Plaintext,
            payload_mode: PayloadMode::PartText,
            rule: PayloadRule::ScaledGradient,
            transport: Transport::InMemory,
            key_bits: 256,
            exponent: fedmf_paillier::DEFAULT_EXPONENT,
            record_transcript: false,
            record_loss: true,
            capture_server_bytes: false,
        }
    }

    pub fn encrypted(key_bits: u32) -> Self {
        Self {
            mode: Mode::Encrypted,
            key_bits,
            ..Self::plaintext()
        }
    }
}

/// Timing and traffic for one round.
#[derive(Debug, Clone, Default)]
pub struct RoundMetrics {
    /// Server-observed wall time of the round.
    pub wall_seconds: f64,
    /// Sum of every client's compute time: decryption, the local update,
    /// and encryption. Serialization and transport make up the difference
    /// to the wall time.
    pub client_seconds: f64,
    /// Slowest single client in the round: the client phase's wall time in
    /// a deployment where every user computes on their own device.
    pub client_seconds_max: f64,
    /// Server compute: the profile-update operations themselves.
    pub server_seconds: f64,
    /// Bytes uploaded by clients (gradients).
    pub bytes_up: u64,
    /// Bytes downloaded by clients (profiles).
    pub bytes_down: u64,
}

/// Aggregate metrics for a run.
#[derive(Debug, Clone, Default)]
pub struct RunMetrics {
    pub per_round: Vec<RoundMetrics>,
    pub key_setup_seconds: f64,
    pub client_seconds_total: f64,
    pub server_seconds_total: f64,
    pub wall_seconds_total: f64,
    pub bytes_total: u64,
}

/// Outcome of a federation run.
pub struct FederationResult {
    pub items: ProfileMatrix<Scalar>,
    pub users: ProfileMatrix<Scalar>,
    /// Loss of (U, V) before any round and after each round; empty unless
    /// `record_loss` was set.
    pub loss_history: Vec<Scalar>,
    pub rounds: usize,
    pub metrics: RunMetrics,
    pub transcript: Option<Transcript<Scalar>>,
    /// Every byte that crossed the server's endpoints, when captured.
    pub server_byte_log: Option<Vec<u8>>,
}

struct ServerParams {
    mode: Mode,
    n_users: usize,
    n_items: usize,
    dim: usize,
    init_scale: Scalar,
    seed: u64,
    exponent: i64,
    max_iters: usize,
    stop_threshold: Scalar,
    record_transcript: bool,
}

struct ServerRoundStats {
    wall_seconds: f64,
    server_seconds: f64,
    bytes_up: u64,
    bytes_down: u64,
}

struct ServerOutcome {
    rounds: usize,
    round_stats: Vec<ServerRoundStats>,
    transcript_rounds: Vec<TranscriptRound<Scalar>>,
    final_plain: Option<ProfileMatrix<Scalar>>,
    key_setup_seconds: f64,
}

struct ClientOutcome {
    user_id: usize,
    u_final: Vec<Scalar>,
    u_history: Vec<Vec<Scalar>>,
    seen_profiles: Vec<ProfileMatrix<Scalar>>,
    final_profiles: Option<ProfileMatrix<Scalar>>,
    compute_seconds: Vec<f64>,
}

fn make_duplex(transport: Transport) -> Result<(Endpoint, Endpoint)> {
    match transport {
        Transport::InMemory => Ok(mem_duplex()),
        Transport::Tcp => tcp_duplex(),
    }
}

fn run_server(mut endpoints: Vec<Endpoint>, params: ServerParams) -> Result<ServerOutcome> {
    let key_timer = Instant::now();
    let pk = match params.mode {
        Mode::Encrypted => {
            let msg = endpoints[0].recv()?;
            Some(parse_pubkey(&msg)?)
        }
        Mode::Plaintext => None,
    };
    let key_setup_seconds = key_timer.elapsed().as_secs_f64();

    let mut state: ServerState = server_init(
        params.mode,
        params.n_items,
        params.dim,
        params.init_scale,
        params.seed,
        params.exponent,
        pk,
    )?;

    let mut round_stats = Vec::new();
    let mut transcript_rounds = Vec::new();
    let mut rounds = 0;
    for t in 0..params.max_iters {
        let wall = Instant::now();
        let bytes_before: (u64, u64) = endpoints
            .iter()
            .fold((0, 0), |acc, ep| (acc.0 + ep.bytes_received, acc.1 + ep.bytes_sent));
        let mut server_seconds = 0.0;
        let mut round_norm: Scalar = 0.0;
        let v_before = (params.record_transcript && params.mode == Mode::Plaintext)
            .then(|| state.plain_profiles().expect("plaintext state").clone());
        let mut payloads = Vec::new();

        let round = t as u32;
        for user in 0..params.n_users {
            let msg = state.profiles_message(round);
            endpoints[user].send(&msg)?;

            let frame = endpoints[user].recv_raw()?;
            let reply = decode_frame(&frame)?;
            let applied = state.apply_gradient(&reply, round, user as u64)?;
            server_seconds += applied.update_seconds;

            if let Some(norm) = applied.inf_norm {
                round_norm = round_norm.max(norm);
            }
            if let (true, Some(payload)) = (params.record_transcript, applied.payload) {
                payloads.push(payload);
            }
        }

        let bytes_after: (u64, u64) = endpoints
            .iter()
            .fold((0, 0), |acc, ep| (acc.0 + ep.bytes_received, acc.1 + ep.bytes_sent));
        round_stats.push(ServerRoundStats {
            wall_seconds: wall.elapsed().as_secs_f64(),
            server_seconds,
            bytes_up: bytes_after.0 - bytes_before.0,
            bytes_down: bytes_after.1 - bytes_before.1,
        });
        if let Some(v_before) = v_before {
            transcript_rounds.push(TranscriptRound { v_before, payloads });
        }
        rounds = t + 1;
        // The stop rule reads payload norms, which only exist in plaintext
        // mode; encrypted runs go the full iteration budget.
        if params.mode == Mode::Plaintext && round_norm < params.stop_threshold {
            break;
        }
    }

    let done = state.done_message(rounds as u32);
    for ep in endpoints.iter_mut() {
        ep.send(&done)?;
    }
    Ok(ServerOutcome {
        rounds,
        round_stats,
        transcript_rounds,
        final_plain: state.plain_profiles().cloned(),
        key_setup_seconds,
    })
}

struct ClientJob {
    state: ClientState,
    server_ep: Endpoint,
    /// Key holder: channels to every peer. Other clients: their end of the
    /// holder channel.
    holder_peer_eps: Vec<Endpoint>,
    key_ep: Option<Endpoint>,
    key_bits: u32,
    seed: u64,
    n_items: usize,
    mode: Mode,
}

fn run_client(mut job: ClientJob) -> Result<ClientOutcome> {
    if job.mode == Mode::Encrypted {
        if job.state.user_id == 0 {
            let (pk, sk) = distribute_keys_from_holder(
                job.key_bits,
                job.seed,
                0,
                &mut job.server_ep,
                &mut job.holder_peer_eps,
            )?;
            job.state.install_keys(pk, sk);
        } else {
            let key_ep = job.key_ep.as_mut().expect("peer clients have a key channel");
            let (pk, sk) = receive_keys(key_ep)?;
            job.state.install_keys(pk, sk);
        }
    }

    let mut compute_seconds = Vec::new();
    loop {
        let frame = job.server_ep.recv_raw()?;
        let msg = decode_frame(&frame)?;
        match &msg.body {
            Body::Profiles(_) => {
                let reply = job.state.round_reply(&msg, job.n_items)?;
                job.server_ep.send(&reply)?;
                compute_seconds.push(job.state.last_compute_seconds);
                // Evaluation tap, outside the timed section.
                job.state.record_seen(&msg, job.n_items)?;
            }
            Body::Done { .. } => {
                job.state.finish(&msg, job.n_items)?;
                break;
            }
            other => {
                return Err(ProtocolError::UnexpectedMessage {
                    expected: "PROFILES or DONE",
                    got: other.tag(),
                })
            }
        }
    }

    Ok(ClientOutcome {
        user_id: job.state.user_id,
        u_final: job.state.profile().to_vec(),
        u_history: std::mem::take(&mut job.state.u_history),
        seen_profiles: std::mem::take(&mut job.state.seen_profiles),
        final_profiles: job.state.final_profiles.take(),
        compute_seconds,
    })
}

/// Runs the full federation: key distribution (encrypted mode), the round
/// loop, and the final broadcast. Returns converged profiles, metrics, and
/// any requested recordings.
pub fn run_federation(
    ratings: &RatingTable<Scalar>,
    config: &TrainConfig<Scalar>,
    opts: &RunOptions,
) -> Result<FederationResult> {
    config.validate().map_err(ProtocolError::Core)?;
    if opts.record_transcript && opts.mode == Mode::Encrypted {
        return Err(ProtocolError::TranscriptNeedsPlaintext);
    }
    let n_users = ratings.n_users();
    let n_items = ratings.n_items();

    // Degenerate topology: nothing to train, the protocol is immediately
    // done with the initial profiles.
    if n_users == 0 || n_items == 0 {
        let (users, items) = fedmf_core::init_profiles(n_users, n_items, config);
        return Ok(FederationResult {
            items,
            users,
            loss_history: Vec::new(),
            rounds: 0,
            metrics: RunMetrics::default(),
            transcript: opts.record_transcript.then(|| Transcript {
                n_users,
                n_items,
                dim: config.dim,
                learning_rate: config.learning_rate,
                lambda_u: config.lambda_u,
                mu_v: config.mu_v,
                payload_mode: opts.payload_mode,
                rule: opts.rule,
                rounds: Vec::new(),
                ground_truth: None,
            }),
            server_byte_log: opts.capture_server_bytes.then(Vec::new),
        });
    }
    if ratings.is_empty() {
        return Err(ProtocolError::Core(fedmf_core::Error::EmptyRatings));
    }

    // Wire up the topology: one duplex per client to the server, plus
    // key-holder-to-peer channels in encrypted mode.
    let capture = opts
        .capture_server_bytes
        .then(|| Arc::new(Mutex::new(Vec::new())));
    let mut server_eps = Vec::with_capacity(n_users);
    let mut client_eps = Vec::with_capacity(n_users);
    for _ in 0..n_users {
        let (server_end, client_end) = make_duplex(opts.transport)?;
        server_eps.push(server_end);
        client_eps.push(client_end);
    }
    if let Some(log) = &capture {
        for ep in server_eps.iter_mut() {
            ep.set_capture(log.clone());
        }
    }
    let mut holder_peer_eps = Vec::new();
    let mut peer_key_eps: Vec<Option<Endpoint>> = (0..n_users).map(|_| None).collect();
    if opts.mode == Mode::Encrypted {
        for peer in 1..n_users {
            let (holder_end, peer_end) = make_duplex(opts.transport)?;
            holder_peer_eps.push(holder_end);
            peer_key_eps[peer] = Some(peer_end);
        }
    }

    let server_params = ServerParams {
        mode: opts.mode,
        n_users,
        n_items,
        dim: config.dim,
        init_scale: config.init_scale,
        seed: config.seed,
        exponent: opts.exponent,
        max_iters: config.max_iters,
        stop_threshold: config.stop_threshold,
        record_transcript: opts.record_transcript,
    };
    let server_handle = thread::Builder::new()
        .name("fedmf-server".into())
        .spawn(move || run_server(server_eps, server_params))
        .expect("spawn server thread");

    let mut client_handles = Vec::with_capacity(n_users);
    for (user, client_ep) in client_eps.into_iter().enumerate() {
        let record_loss = opts.record_loss && user == 0;
        let state = ClientState::new(
            user,
            ratings.user_ratings(user).to_vec(),
            config.clone(),
            opts.mode,
            opts.payload_mode,
            opts.rule,
            opts.exponent,
            record_loss,
            user == 0,
        );
        let job = ClientJob {
            state,
            server_ep: client_ep,
            holder_peer_eps: if user == 0 {
                std::mem::take(&mut holder_peer_eps)
            } else {
                Vec::new()
            },
            key_ep: peer_key_eps[user].take(),
            key_bits: opts.key_bits,
            seed: config.seed,
            n_items,
            mode: opts.mode,
        };
        let handle = thread::Builder::new()
            .name(format!("fedmf-client-{user}"))
            .stack_size(1 << 20)
            .spawn(move || run_client(job))
            .expect("spawn client thread");
        client_handles.push(handle);
    }

    let server_out = server_handle
        .join()
        .map_err(|_| ProtocolError::PartyPanicked("server".into()))?
        .map_err(|e| ProtocolError::PartyFailure {
            party: "server".into(),
            round: 0,
            source: Box::new(e),
        })?;
    let mut client_outs = Vec::with_capacity(n_users);
    for (user, handle) in client_handles.into_iter().enumerate() {
        let out = handle
            .join()
            .map_err(|_| ProtocolError::PartyPanicked(format!("client {user}")))?
            .map_err(|e| ProtocolError::PartyFailure {
                party: format!("client {user}"),
                round: 0,
                source: Box::new(e),
            })?;
        client_outs.push(out);
    }
    client_outs.sort_by_key(|c| c.user_id);

    let rounds = server_out.rounds;
    let mut users = ProfileMatrix::zeros(n_users, config.dim);
    for out in &client_outs {
        users.row_mut(out.user_id).copy_from_slice(&out.u_final);
    }
    let items = match opts.mode {
        Mode::Plaintext => server_out.final_plain.expect("plaintext server keeps profiles"),
        Mode::Encrypted => client_outs[0]
            .final_profiles
            .clone()
            .ok_or(ProtocolError::MissingKey("final decrypted profiles"))?,
    };

    let loss_history = if opts.record_loss {
        loss_trace(ratings, config, &client_outs, rounds)?
    } else {
        Vec::new()
    };

    let transcript = opts.record_transcript.then(|| Transcript {
        n_users,
        n_items,
        dim: config.dim,
        learning_rate: config.learning_rate,
        lambda_u: config.lambda_u,
        mu_v: config.mu_v,
        payload_mode: opts.payload_mode,
        rule: opts.rule,
        rounds: server_out.transcript_rounds,
        ground_truth: None,
    });

    let mut metrics = RunMetrics {
        key_setup_seconds: server_out.key_setup_seconds,
        ..RunMetrics::default()
    };
    for (t, stat) in server_out.round_stats.iter().enumerate() {
        let client_seconds: f64 = client_outs
            .iter()
            .map(|c| c.compute_seconds.get(t).copied().unwrap_or(0.0))
            .sum();
        let client_seconds_max: f64 = client_outs
            .iter()
            .map(|c| c.compute_seconds.get(t).copied().unwrap_or(0.0))
            .fold(0.0, f64::max);
        metrics.per_round.push(RoundMetrics {
            wall_seconds: stat.wall_seconds,
            client_seconds,
            client_seconds_max,
            server_seconds: stat.server_seconds,
            bytes_up: stat.bytes_up,
            bytes_down: stat.bytes_down,
        });
        metrics.client_seconds_total += client_seconds;
        metrics.server_seconds_total += stat.server_seconds;
        metrics.wall_seconds_total += stat.wall_seconds;
        metrics.bytes_total += stat.bytes_up + stat.bytes_down;
    }

    Ok(FederationResult {
        items,
        users,
        loss_history,
        rounds,
        metrics,
        transcript,
        server_byte_log: capture.map(|log| {
            Arc::try_unwrap(log)
                .map(|m| m.into_inner().unwrap())
                .unwrap_or_default()
        }),
    })
}

/// Reconstructs the per-round loss trace from the evaluation recordings:
/// client profiles after each round plus the profile downloads of user 0
/// (whose round-t download shows the state after round t-1).
fn loss_trace(
    ratings: &RatingTable<Scalar>,
    config: &TrainConfig<Scalar>,
    client_outs: &[ClientOutcome],
    rounds: usize,
) -> Result<Vec<Scalar>> {
    let tap = &client_outs[0];
    let final_v = tap
        .final_profiles
        .as_ref()
        .ok_or(ProtocolError::MissingKey("evaluation profiles"))?;

    let users_at = |t: usize| -> ProfileMatrix<Scalar> {
        let mut users = ProfileMatrix::zeros(client_outs.len(), config.dim);
        for out in client_outs {
            users.row_mut(out.user_id).copy_from_slice(&out.u_history[t]);
        }
        users
    };

    let mut trace = Vec::with_capacity(rounds + 1);
    let v0 = tap.seen_profiles.first().unwrap_or(final_v);
    trace.push(loss(&users_at(0), v0, ratings, config.lambda_u, config.mu_v)?);
    for t in 0..rounds {
        let v_after = if t + 1 < rounds {
            &tap.seen_profiles[t + 1]
        } else {
            final_v
        };
        trace.push(loss(
            &users_at(t + 1),
            v_after,
            ratings,
            config.lambda_u,
            config.mu_v,
        )?);
    }
    Ok(trace)
}
