//! Generated labeled sets for exercising the builtin classifier.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::instance::{Instance, Label};
use crate::ir::Technology;
use crate::rules::SmellType;

const HOST_WORDS: &[&str] = &[
    "mirror", "repo", "pkgs", "dl", "files", "artifacts", "cdn", "downloads", "releases", "static",
];
const PATH_WORDS: &[&str] = &[
    "agent", "tools", "client", "server", "bundle", "core", "plugin", "runtime", "cli", "daemon",
];
const EXTS: &[&str] = &["tgz", "rpm", "deb", "zip", "tar.gz", "sh"];

fn window(lines: [&str; 5]) -> String {
    lines.join("\n")
}

/// Labeled HTTP findings where the label is FP exactly when the target line
/// points at `example.com`.
///
/// Returns `(train, val)` with `n_train` and `n_val` instances, classes
/// alternating so both splits hold both labels.
pub fn separable_set(n_train: usize, n_val: usize, seed: u64) -> (Vec<Instance>, Vec<Instance>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |i: usize| {
        let fp = i % 2 == 1;
        let host = if fp {
            "example.com".to_string()
        } else {
            format!(
                "{}{}.corp-{}.net",
                HOST_WORDS.choose(&mut rng).unwrap(),
                rng.gen_range(1..40),
                PATH_WORDS.choose(&mut rng).unwrap()
            )
        };
        let file = format!(
            "{}-{}.{}",
            PATH_WORDS.choose(&mut rng).unwrap(),
            rng.gen_range(1..100),
            EXTS.choose(&mut rng).unwrap()
        );
        let key = PATH_WORDS.choose(&mut rng).unwrap();
        let target = format!("    url: http://{host}/{key}/{file}");
        let context = window([
            "- name: fetch artifact",
            "  get_url:",
            &target,
            &format!("    dest: /opt/{key}/{file}"),
            "    mode: '0644'",
        ]);
        Instance::new(
            Technology::Ansible,
            format!("synthetic/play{i}.yml"),
            3,
            SmellType::HttpWithoutTls,
            target,
            context,
            "hasHttpUrl: keyword 'http://'",
        )
        .with_label(if fp { Label::FP } else { Label::TP })
    };
    let train = (0..n_train).map(&mut make).collect();
    let val = (n_train..n_train + n_val).map(&mut make).collect();
    (train, val)
}

const SERVICES: &[&str] = &[
    "api", "mq", "cache", "app", "web", "keystone", "nova", "glance", "neutron", "cinder", "heat",
    "swift", "metrics", "backup", "search", "auth",
];
const DEFAULT_NAMES: &[&str] = &[
    "svc", "deploy", "nova", "glance", "service", "openstack", "app", "www-data", "postgres",
    "rabbit", "admin_ro", "monitor",
];
const LOOKUPS: &[&str] = &["hiera", "lookup", "pick"];
const SECRETS: &[&str] = &[
    "S3cr3t!", "hunter2", "P@ssw0rd", "changeme123", "Tr0ub4dor&3", "letmein!", "Zx9#qLm2",
    "Winter2024!", "qwerty!77", "dr0wssap",
];

/// Pseudo-labeled findings in the shape a teacher would produce: usernames
/// that only appear as lookup fallbacks are FP, literal credentials are TP,
/// along with labeled examples for the other targeted smells.
pub fn pseudo_label_set(seed: u64) -> (Vec<Instance>, Vec<Instance>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Vec::new();
    let mut n = 0usize;
    let mut push = |all: &mut Vec<Instance>, tech, smell, target: String, context: String, rationale: &str, label| {
        n += 1;
        let ext = match tech {
            Technology::Puppet => "pp",
            Technology::Ansible => "yml",
            Technology::Chef => "rb",
        };
        all.push(
            Instance::new(tech, format!("synthetic/s{n}.{ext}"), 3, smell, target, context, rationale)
                .with_label(label),
        );
    };

    for _ in 0..40 {
        // lookup fallback for a username: benign default
        let svc = SERVICES.choose(&mut rng).unwrap();
        let lookup = LOOKUPS.choose(&mut rng).unwrap();
        let default = DEFAULT_NAMES.choose(&mut rng).unwrap();
        let target = format!("  ${svc}_user = {lookup}('{svc}::user', '{default}')");
        let context = window([
            &format!("class {svc}::params {{"),
            &format!("  ${svc}_host = {lookup}('{svc}::host', 'localhost')"),
            &target,
            &format!("  ${svc}_port = {lookup}('{svc}::port', {})", rng.gen_range(1000..9000)),
            "}",
        ]);
        push(&mut all, Technology::Puppet, SmellType::HardCodedSecret, target, context,
            "isSecret with literal value: keyword 'user'", Label::FP);

        // literal credential
        let svc = SERVICES.choose(&mut rng).unwrap();
        let secret = SECRETS.choose(&mut rng).unwrap();
        let (tech, target, context) = match rng.gen_range(0..3) {
            0 => {
                let t = format!("  ${svc}_password = '{secret}'");
                let c = window([&format!("class {svc}::config {{"), &format!("  ${svc}_port = 5432"), &t, "  $ensure = 'present'", "}"]);
                (Technology::Puppet, t, c)
            }
            1 => {
                let t = format!("    {svc}_password: \"{secret}\"");
                let c = window(["- hosts: db", "  vars:", &t, &format!("    {svc}_port: 5432"), "  tasks:"]);
                (Technology::Ansible, t, c)
            }
            _ => {
                let t = format!("default['{svc}']['password'] = '{secret}'");
                let c = window([&format!("default['{svc}']['port'] = 5432"), "", &t, "", &format!("default['{svc}']['pool'] = 5")]);
                (Technology::Chef, t, c)
            }
        };
        push(&mut all, tech, SmellType::HardCodedSecret, target, context,
            "isSecret with literal value: keyword 'password'", Label::TP);

        // suspicious comments
        let svc = SERVICES.choose(&mut rng).unwrap();
        let tp_comment = ["# TODO: disable TLS verification until certs are rotated",
            "# FIXME: hardcoded credentials, move to vault", "# HACK: open firewall for testing",
            "# TODO: insecure workaround for broken proxy"].choose(&mut rng).unwrap().to_string();
        let c = window([&format!("class {svc} {{"), "", &tp_comment, &format!("  include {svc}::install"), "}"]);
        push(&mut all, Technology::Puppet, SmellType::SuspiciousComment, tp_comment, c,
            "isComment with suspicious word: keyword 'todo'", Label::TP);
        let fp_comment = [format!("# install the {svc} bug tracker"), format!("# {svc}: apply later stage settings"),
            "# see the todo app docs".to_string(), format!("# {svc} xxx-large instance profile")]
            .choose(&mut rng).unwrap().clone();
        let c = window(["- hosts: all", "  tasks:", &fp_comment, &format!("    - name: install {svc}"), "      package: name=app"]);
        push(&mut all, Technology::Ansible, SmellType::SuspiciousComment, fp_comment, c,
            "isComment with suspicious word: keyword 'bug'", Label::FP);

        // weak crypto
        let t = "  checksum => 'md5',".to_string();
        let c = window([&format!("file {{ '/etc/{svc}.conf':"), "  ensure   => file,", &t, "  mode     => '0600',", "}"]);
        push(&mut all, Technology::Puppet, SmellType::WeakCrypto, t, c, "isWeakCrypt: keyword 'md5'", Label::TP);
        let t = format!("  package 'md5deep-{svc}'");
        let c = window(["# forensics tooling", "", &t, "", ""]);
        push(&mut all, Technology::Chef, SmellType::WeakCrypto, t, c, "isWeakCrypt: keyword 'md5'", Label::FP);
    }

    all.shuffle(&mut rng);
    // dedup on the snippet key so no generated duplicate leaks across splits
    let mut seen = std::collections::HashSet::new();
    all.retain(|i| seen.insert(i.snippet_key()));
    let n_val = all.len() / 9;
    let val = all.split_off(all.len() - n_val);
    (all, val)
}
