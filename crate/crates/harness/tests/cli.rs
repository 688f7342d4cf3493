//! The command-line surface, exercised through the real binaries: trace
//! synthesis and stats, service key generation, the benchmark driver, the
//! serve daemons, and RA resolution over the wire.

use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::Arc;

use vpki_bench::launch::{launch, LaunchParams};
use vpki_core::clock::{Clock, SystemClock};
use vpki_core::codec::encode;
use vpki_core::crypto::SharedRng;
use vpki_core::model::{IdString, RaCredential, SubjectId};
use vpki_core::obu::VehicleContext;
use vpki_core::policy::PolicyKind;
use vpki_core::time::{DurMs, TimeMs, Window};
use vpki_core::transport::PcaChannel;

fn run(bin: &str, args: &[&str]) -> (bool, String, String) {
    let out = Command::new(bin)
        .args(args)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .output()
        .expect("spawn binary");
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn trace_synth_and_stats_cli() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let (ok, stdout, stderr) = run(
        env!("CARGO_BIN_EXE_trace"),
        &[
            "synth",
            "--trips",
            "500",
            "--window",
            "3600",
            "--mean-duration",
            "590.49",
            "--seed",
            "42",
            "--out",
            trace.to_str().unwrap(),
        ],
    );
    assert!(ok, "synth failed: {stderr}");
    assert!(stdout.contains("wrote 500 trips"));

    let (ok, stdout, stderr) =
        run(env!("CARGO_BIN_EXE_trace"), &["stats", "--in", trace.to_str().unwrap()]);
    assert!(ok, "stats failed: {stderr}");
    assert!(stdout.contains("trips           : 500"), "{stdout}");

    // determinism: the same seed writes the same bytes
    let again = dir.path().join("again.csv");
    run(
        env!("CARGO_BIN_EXE_trace"),
        &[
            "synth",
            "--trips",
            "500",
            "--window",
            "3600",
            "--mean-duration",
            "590.49",
            "--seed",
            "42",
            "--out",
            again.to_str().unwrap(),
        ],
    );
    assert_eq!(std::fs::read(&trace).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn keygen_cli_produces_loadable_keys() {
    let dir = tempfile::tempdir().unwrap();
    let key_path = dir.path().join("ltca.key");
    let (ok, stdout, stderr) =
        run(env!("CARGO_BIN_EXE_ltca"), &["keygen", "--out", key_path.to_str().unwrap()]);
    assert!(ok, "keygen failed: {stderr}");
    let keys = vpki_bench::config::load_keypair(&key_path).unwrap();
    assert_eq!(stdout.trim(), hex::encode(keys.public.as_bytes()));
}

#[test]
fn bench_run_cli_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    run(
        env!("CARGO_BIN_EXE_trace"),
        &[
            "synth",
            "--trips",
            "60",
            "--window",
            "120",
            "--mean-duration",
            "120",
            "--seed",
            "3",
            "--out",
            trace.to_str().unwrap(),
        ],
    );
    let out_dir = dir.path().join("out");
    let (ok, stdout, stderr) = run(
        env!("CARGO_BIN_EXE_bench"),
        &[
            "run",
            "--trace",
            trace.to_str().unwrap(),
            "--policy",
            "p3",
            "--gamma",
            "300",
            "--tau",
            "30",
            "--compression",
            "120",
            "--launch-servers",
            "--seed",
            "3",
            "--out",
            out_dir.to_str().unwrap(),
        ],
    );
    assert!(ok, "bench run failed: {stderr}");
    assert!(stdout.contains("error rate       : 0.0000"), "{stdout}");
    for file in ["records.csv", "series.csv", "summary.json", "config.json", "audit.json"] {
        assert!(out_dir.join(file).exists(), "missing {file}");
    }
}

/// Serve a config-driven LTCA daemon, register over mTLS, then shut it
/// down.
#[test]
fn ltca_serve_daemon_accepts_registrations() {
    let dir = tempfile::tempdir().unwrap();
    let tls_dir = dir.path().join("tls");
    let material = vpki_net::tls::TlsMaterial::generate(&[]).unwrap();
    material.save(&tls_dir).unwrap();

    let key_path = dir.path().join("ltca.key");
    run(env!("CARGO_BIN_EXE_ltca"), &["keygen", "--out", key_path.to_str().unwrap()]);

    // grab a free port for the daemon
    let port = {
        let sock = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        sock.local_addr().unwrap().port()
    };
    let config_path = dir.path().join("ltca.toml");
    std::fs::write(
        &config_path,
        format!(
            r#"issuer_id = "ltca.cli"
listen = "127.0.0.1:{port}"
key_file = "{key}"
state_file = "{state}"
ra_credential_hex = "{cred}"

[tls]
dir = "{tls}"
"#,
            key = key_path.display(),
            state = dir.path().join("ltca.log").display(),
            cred = hex::encode([7u8; 32]),
            tls = tls_dir.display(),
        ),
    )
    .unwrap();

    let mut child = Command::new(env!("CARGO_BIN_EXE_ltca"))
        .args(["serve", "--config", config_path.to_str().unwrap()])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();

    // wait for the listener, then register a vehicle over mTLS
    let mutual =
        vpki_net::tls::client_config_mutual(&material.ca_cert_pem, &material.client).unwrap();
    let endpoint =
        vpki_net::client::Endpoint::new(format!("127.0.0.1:{port}"), "localhost", mutual);
    let keys = vpki_core::crypto::generate_keypair_os().unwrap();
    let mut registered = None;
    for _ in 0..50 {
        match vpki_net::client::register_vehicles(
            &endpoint,
            &[(SubjectId([0x77; 16]), keys.public.clone())],
        ) {
            Ok(ltcs) => {
                registered = Some(ltcs);
                break;
            }
            Err(_) => std::thread::sleep(std::time::Duration::from_millis(100)),
        }
    }
    child.kill().unwrap();
    let _ = child.wait();
    let ltcs = registered.expect("daemon never became reachable");
    assert_eq!(ltcs[0].subject_id, SubjectId([0x77; 16]));
}

#[test]
fn ra_resolve_cli_walks_the_chain() {
    let dir = tempfile::tempdir().unwrap();
    let credential = RaCredential([0x44; 32]);
    let t_date = TimeMs(TimeMs::now().as_millis() / 86_400_000 * 86_400_000);
    let params = LaunchParams {
        issuer_id: IdString::new("ltca.ra-cli").unwrap(),
        pca_id: IdString::new("pca.ra-cli").unwrap(),
        tau: DurMs::from_secs(30),
        gamma: DurMs::from_secs(300),
        t_date,
        skew: DurMs::from_secs(120),
        grace: DurMs::from_secs(120),
        credential,
        state_dir: None,
        seed: 4,
    };
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let deployment = launch(&params, clock.clone()).unwrap();
    let tls_dir = dir.path().join("tls");
    vpki_bench::launch::save_material(&deployment, &tls_dir).unwrap();

    // acquire one batch so there is something to resolve
    let keys = vpki_core::crypto::generate_keypair_os().unwrap();
    let ltc = deployment
        .ltca
        .register_vehicle(SubjectId([0x45; 16]), keys.public.clone(), clock.now())
        .unwrap();
    let pca_info = deployment.pca_channel.fetch_config().unwrap();
    let policy = VehicleContext::policy_from_pca(PolicyKind::P2, &pca_info);
    let mut ctx = VehicleContext::new(
        ltc,
        keys,
        deployment.ltca.public_key().clone(),
        policy,
        pca_info,
        SharedRng::system(),
    );
    ctx.fill_pool(10);
    let now = clock.now();
    let window = Window { start: now, end: now + DurMs::from_secs(300) };
    ctx.acquire(window, &*clock, &deployment.ltca_channel, &deployment.pca_channel).unwrap();

    let pseudonym_path = dir.path().join("pseudonym.hex");
    std::fs::write(
        &pseudonym_path,
        hex::encode(encode(&ctx.pseudonym_store()[3].pseudonym)),
    )
    .unwrap();

    let (ok, stdout, stderr) = run(
        env!("CARGO_BIN_EXE_ra"),
        &[
            "resolve",
            "--pseudonym",
            pseudonym_path.to_str().unwrap(),
            "--pca",
            &deployment.pca_addr(),
            "--ltca",
            &deployment.ltca_addr(),
            "--tls-dir",
            tls_dir.to_str().unwrap(),
            "--credential-hex",
            &hex::encode(credential.0),
        ],
    );
    assert!(ok, "ra resolve failed: {stderr}");
    assert!(stdout.contains("chain valid      : yes"), "{stdout}");

    // a wrong credential must fail with the server's error surfaced
    let (ok, _, stderr) = run(
        env!("CARGO_BIN_EXE_ra"),
        &[
            "resolve",
            "--pseudonym",
            pseudonym_path.to_str().unwrap(),
            "--pca",
            &deployment.pca_addr(),
            "--ltca",
            &deployment.ltca_addr(),
            "--tls-dir",
            tls_dir.to_str().unwrap(),
            "--credential-hex",
            &hex::encode([0u8; 32]),
        ],
    );
    assert!(!ok);
    assert!(stderr.contains("212") || stderr.contains("authorized"), "{stderr}");
}

/// Config parsing sanity for the checked-in helpers.
#[test]
fn config_helpers_reject_bad_input(){
    assert!(vpki_bench::config::parse_credential("zz").is_err());
    assert!(vpki_bench::config::parse_credential(&hex::encode([1u8; 16])).is_err());
    assert!(vpki_bench::config::id_string("").is_err());
    let dir = Path::new("/nonexistent-vpki");
    assert!(vpki_bench::config::load_keypair(&dir.join("k")).is_err());
}
