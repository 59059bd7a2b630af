use std::fmt;

use ff::Field;
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::algebra::{G2Elem, Scalar};
use crate::cprf::{encryption_share, Epoch, PairwiseKeyRing};
use crate::encryption::{encrypt, initial_ciphertext, Ciphertext};
use crate::error::Error;
use crate::key_exchange::{dh_keygen, ring_from_exchange, DhKeyPair, DhParams};
use crate::permutation::{generate_permutation, PermutationAssignment, PrimeList};
use crate::rho::{derive_rho_points, derive_seed, Commitment, Reveal, CONTRIBUTION_BYTES};
use crate::router::RouterState;
use crate::token::{assemble_complete, gen_sender_secrets, make_token_rows, SenderSecrets, TokenRow};

use super::config::{Fault, SimConfig};
use super::framing::{frame, unframe};
use super::wire::{Endpoint, Message, Transcript};

/// A sub-protocol error tagged with the round and step it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimError {
    pub round: u32,
    pub step: &'static str,
    pub source: Error,
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "round {} ({}): {}", self.round, self.step, self.source)
    }
}

impl std::error::Error for SimError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Everything one sender holds after setup.
#[derive(Clone, Debug)]
pub struct SenderState {
    index: usize,
    dh: DhKeyPair,
    ring: PairwiseKeyRing,
    assignment: PermutationAssignment,
    secrets: SenderSecrets,
    rng: ChaCha20Rng,
}

impl SenderState {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn dh(&self) -> &DhKeyPair {
        &self.dh
    }

    pub fn ring(&self) -> &PairwiseKeyRing {
        &self.ring
    }

    /// This sender's own prime and position; nothing about anyone else.
    pub fn assignment(&self) -> &PermutationAssignment {
        &self.assignment
    }

    pub fn secrets(&self) -> &SenderSecrets {
        &self.secrets
    }

    pub fn share(&self, t: Epoch) -> Result<Scalar, Error> {
        encryption_share(&self.ring, t)
    }

    /// Encrypts under an already derived share, drawing α, α′ from this sender's stream.
    pub fn encrypt_with_share(&mut self, share: &Scalar, x: u64, t: Epoch, bits: u32) -> Result<Ciphertext, Error> {
        encrypt(&self.secrets, share, x, t, bits, &mut self.rng)
    }
}

/// What the corrupted senders jointly know.
#[derive(Clone, Debug, Default)]
pub struct AdversaryView {
    pub secrets: Vec<SenderSecrets>,
    pub rings: Vec<PairwiseKeyRing>,
    /// `(i, π(i))` for each corrupted `i`.
    pub positions: Vec<(usize, usize)>,
}

/// Collects the state of every sender in `cfg.corrupt_senders`.
pub fn corruption_view(cfg: &SimConfig, senders: &[SenderState]) -> AdversaryView {
    let mut view = AdversaryView::default();
    for &i in &cfg.corrupt_senders {
        let s = &senders[i];
        view.secrets.push(s.secrets.clone());
        view.rings.push(s.ring.clone());
        view.positions.push((i, s.assignment.position));
    }
    view
}

/// A running protocol instance.
#[derive(Debug)]
pub struct Simulation {
    cfg: SimConfig,
    senders: Vec<SenderState>,
    router: RouterState,
    transcript: Transcript,
    round: u32,
    permutation_attempts: u32,
    last_cts: Vec<Ciphertext>,
}

struct Rounds<'a> {
    round: u32,
    transcript: &'a mut Transcript,
}

impl Rounds<'_> {
    fn next(&mut self) {
        self.round += 1;
    }

    fn send(&mut self, from: Endpoint, to: Endpoint, message: Message) {
        self.transcript.push(self.round, from, to, message);
    }

    fn fail<T>(&mut self, step: &'static str, source: Error) -> Result<T, SimError> {
        self.send(Endpoint::Router, Endpoint::Broadcast, Message::Error { text: source.to_string() });
        Err(SimError {
            round: self.round,
            step,
            source,
        })
    }
}

fn at<T>(r: &mut Rounds, step: &'static str, res: Result<T, Error>) -> Result<T, SimError> {
    match res {
        Ok(v) => Ok(v),
        Err(e) => r.fail(step, e),
    }
}

/// Runs setup steps 1–7 and installs the router.
pub fn run_setup(cfg: &SimConfig) -> Result<Simulation, SimError> {
    let mut transcript = Transcript::new();
    let mut r = Rounds {
        round: 0,
        transcript: &mut transcript,
    };
    at(&mut r, "config", cfg.validate())?;
    let n = cfg.n;

    // Steps 1–2: public parameters; the PRF family is fixed in `cprf`.
    let params: DhParams = cfg.dh_profile.params();
    let primes = PrimeList::for_senders(n);
    at(&mut r, "parameters", primes.check_capacity(n, params.p()))?;

    let mut root = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut rngs: Vec<ChaCha20Rng> = (0..n).map(|_| ChaCha20Rng::from_seed(root.gen())).collect();

    // Step 3: Diffie–Hellman mesh.
    r.next();
    let keys: Vec<DhKeyPair> = rngs.iter_mut().map(|rng| dh_keygen(&params, rng)).collect();
    for (i, k) in keys.iter().enumerate() {
        r.send(
            Endpoint::Sender(i),
            Endpoint::Broadcast,
            Message::DhPublic {
                sender: i as u32,
                value: params.encode(k.public()),
            },
        );
    }
    let publics: Vec<BigUint> = keys.iter().map(|k| k.public().clone()).collect();
    let rings = (0..n)
        .map(|i| ring_from_exchange(&params, i, &keys[i], &publics))
        .collect::<Result<Vec<_>, _>>();
    let rings = at(&mut r, "key exchange", rings)?;

    // Step 4: permutation from masked prime products.
    r.next();
    let mut rng_refs: Vec<&mut ChaCha20Rng> = rngs.iter_mut().collect();
    let run = generate_permutation(&params, &primes, &rings, Epoch::INITIAL, &mut rng_refs);
    let run = at(&mut r, "permutation", run)?;
    for view in &run.router_view {
        for (i, m) in view.masked.iter().enumerate() {
            r.send(
                Endpoint::Sender(i),
                Endpoint::Router,
                Message::MaskedPrime {
                    sender: i as u32,
                    attempt: view.attempt,
                    value: params.encode(m),
                },
            );
        }
        let reply = match &view.published {
            Some(p) => Message::SortedPrimes {
                attempt: view.attempt,
                primes: p.clone(),
            },
            None => Message::Retry {
                attempt: view.attempt + 1,
            },
        };
        r.send(Endpoint::Router, Endpoint::Broadcast, reply);
        r.next();
    }

    // Step 5: commit-reveal for the ρ-points.
    let contributions: Vec<[u8; CONTRIBUTION_BYTES]> = rngs.iter_mut().map(|rng| rng.gen()).collect();
    let commitments: Vec<Commitment> = contributions.iter().map(|c| Commitment::commit(c)).collect();
    for (i, c) in commitments.iter().enumerate() {
        r.send(
            Endpoint::Sender(i),
            Endpoint::Broadcast,
            Message::Commit {
                sender: i as u32,
                digest: c.0,
            },
        );
    }
    r.next();
    let mut reveals = Vec::with_capacity(n);
    for i in 0..n {
        if cfg.faults.contains(&Fault::MissingReveal { sender: i }) {
            continue;
        }
        let mut contribution = contributions[i].to_vec();
        if cfg.faults.contains(&Fault::BadReveal { sender: i }) {
            contribution[0] ^= 0x01;
        }
        r.send(
            Endpoint::Sender(i),
            Endpoint::Broadcast,
            Message::Reveal {
                sender: i as u32,
                contribution: contribution.clone(),
            },
        );
        reveals.push(Reveal {
            index: i,
            contribution,
            commitment: commitments[i],
        });
    }
    if let Some(k) = (0..n).find(|&k| reveals.get(k).map(|r| r.index) != Some(k)) {
        return r.fail("commit-reveal", Error::MissingReveal(k));
    }
    let seed = at(&mut r, "commit-reveal", derive_seed(&reveals))?;
    let rho_points: Vec<G2Elem> = derive_rho_points(&seed, n);

    // Step 6: secrets and token rows.
    r.next();
    let secrets = run
        .assignments
        .iter()
        .zip(rngs.iter_mut())
        .map(|(a, rng)| gen_sender_secrets(rng, a.owner, n, a.position))
        .collect::<Result<Vec<_>, _>>();
    let secrets = at(&mut r, "secrets", secrets)?;
    let rows: Vec<Vec<TokenRow>> = secrets.iter().map(|s| make_token_rows(s, &rho_points)).collect();
    for (i, rs) in rows.iter().enumerate() {
        r.send(
            Endpoint::Sender(i),
            Endpoint::Router,
            Message::TokenRows {
                sender: i as u32,
                rows: rs.iter().flat_map(TokenRow::to_bytes).collect(),
            },
        );
    }
    let token = at(&mut r, "token", assemble_complete(rows))?;

    // Step 7: initial ciphertexts and router install.
    r.next();
    let mut initial = Vec::with_capacity(n);
    for i in 0..n {
        let share = at(&mut r, "initial ciphertext", encryption_share(&rings[i], Epoch::INITIAL))?;
        let ct = initial_ciphertext(&secrets[i], &share, &mut rngs[i]);
        r.send(Endpoint::Sender(i), Endpoint::Router, ciphertext_message(&ct));
        initial.push(ct);
    }
    let mut router = at(&mut r, "install", RouterState::install(token, &initial, cfg.bits))?;
    router.set_parallel(cfg.parallel);
    let round = r.round;

    let senders = keys
        .into_iter()
        .zip(rings)
        .zip(run.assignments.iter())
        .zip(secrets)
        .zip(rngs)
        .enumerate()
        .map(|(index, ((((dh, ring), &assignment), secrets), rng))| SenderState {
            index,
            dh,
            ring,
            assignment,
            secrets,
            rng,
        })
        .collect();
    Ok(Simulation {
        cfg: cfg.clone(),
        senders,
        router,
        transcript,
        round,
        permutation_attempts: run.attempts(),
        last_cts: initial,
    })
}

fn ciphertext_message(ct: &Ciphertext) -> Message {
    Message::Ciphertext {
        sender: ct.sender as u32,
        epoch: ct.epoch.0,
        payload: ct.payload().to_vec(),
    }
}

impl Simulation {
    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn n(&self) -> usize {
        self.cfg.n
    }

    pub fn senders(&self) -> &[SenderState] {
        &self.senders
    }

    pub fn sender_mut(&mut self, i: usize) -> &mut SenderState {
        &mut self.senders[i]
    }

    pub fn router(&self) -> &RouterState {
        &self.router
    }

    pub fn router_mut(&mut self) -> &mut RouterState {
        &mut self.router
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn permutation_attempts(&self) -> u32 {
        self.permutation_attempts
    }

    /// `π` as seen by an omniscient observer: `positions()[i] = π(i)`.
    pub fn positions(&self) -> Vec<usize> {
        self.senders.iter().map(|s| s.assignment.position).collect()
    }

    /// Applies `π⁻¹` to `inputs`: the vector the router must output.
    pub fn expected_output(&self, inputs: &[u64]) -> Vec<u64> {
        let mut out = vec![0; inputs.len()];
        for (i, &p) in self.positions().iter().enumerate() {
            out[p] = inputs[i];
        }
        out
    }

    pub fn corruption_view(&self) -> AdversaryView {
        corruption_view(&self.cfg, &self.senders)
    }

    /// Every sender encrypts its message for epoch `t`.
    pub fn encrypt_epoch(&mut self, messages: &[u64], t: Epoch) -> Result<Vec<Ciphertext>, SimError> {
        let round = self.round + 1;
        let fail = move |source| SimError {
            round,
            step: "encrypt",
            source,
        };
        if messages.len() != self.n() {
            return Err(fail(Error::CiphertextCount {
                expected: self.n(),
                got: messages.len(),
            }));
        }
        if self.cfg.faults.contains(&Fault::Replay { epoch: t.0 }) {
            return Ok(self
                .last_cts
                .iter()
                .map(|c| Ciphertext { epoch: t, ..c.clone() })
                .collect());
        }
        let bits = self.cfg.bits;
        let mut cts = Vec::with_capacity(self.n());
        for (i, &x) in messages.iter().enumerate() {
            let s = &mut self.senders[i];
            let mut share = s.share(t).map_err(fail)?;
            if self.cfg.faults.contains(&Fault::CorruptShare { sender: i, epoch: t.0 }) {
                share += Scalar::ONE;
            }
            cts.push(s.encrypt_with_share(&share, x, t, bits).map_err(fail)?);
        }
        Ok(cts)
    }

    /// Hands a batch to the router and delivers slot `j` to receiver `j`.
    pub fn route(&mut self, cts: Vec<Ciphertext>, t: Epoch) -> Result<Vec<u64>, SimError> {
        let mut r = Rounds {
            round: self.round,
            transcript: &mut self.transcript,
        };
        r.next();
        for ct in &cts {
            r.send(Endpoint::Sender(ct.sender), Endpoint::Router, ciphertext_message(ct));
        }
        let res = self.router.route(&cts, t);
        self.round = r.round;
        let outputs = at(&mut r, "route", res)?;
        let wire: Vec<u32> = outputs.iter().map(|&x| x as u32).collect();
        for j in 0..outputs.len() {
            r.send(
                Endpoint::Router,
                Endpoint::Receiver(j),
                Message::Routed {
                    epoch: t.0,
                    outputs: wire.clone(),
                },
            );
        }
        self.last_cts = cts;
        Ok(outputs)
    }

    /// One full communication epoch.
    pub fn run_epoch(&mut self, messages: &[u64], t: Epoch) -> Result<Vec<u64>, SimError> {
        let cts = self.encrypt_epoch(messages, t)?;
        self.route(cts, t)
    }

    /// Next unused epoch.
    pub fn next_epoch(&self) -> Epoch {
        self.router.last_epoch().next()
    }

    /// Sends one byte payload per sender over as many epochs as the longest needs.
    ///
    /// Returns the payload delivered to each receiver slot.
    pub fn send_payloads(&mut self, payloads: &[Vec<u8>]) -> Result<Vec<Vec<u8>>, SimError> {
        let bits = self.cfg.bits;
        let fail = |source| SimError {
            round: self.round,
            step: "framing",
            source,
        };
        let framed = payloads
            .iter()
            .map(|p| frame(p, bits))
            .collect::<Result<Vec<_>, _>>()
            .map_err(fail)?;
        let blocks = framed.iter().map(Vec::len).max().unwrap_or(0);
        let mut received = vec![Vec::with_capacity(blocks); self.n()];
        for k in 0..blocks {
            let msgs: Vec<u64> = framed.iter().map(|f| f.get(k).copied().unwrap_or(0)).collect();
            let t = self.next_epoch();
            for (slot, x) in received.iter_mut().zip(self.run_epoch(&msgs, t)?) {
                slot.push(x);
            }
        }
        received.iter().map(|r| unframe(r, bits)).collect::<Result<_, _>>().map_err(|source| SimError {
            round: self.round,
            step: "framing",
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::wire::tag;
    use std::collections::BTreeSet;

    #[test]
    fn setup_is_deterministic() {
        let cfg = SimConfig::new(2, 8, 1, 1);
        let a = run_setup(&cfg).unwrap();
        let b = run_setup(&cfg).unwrap();
        assert_eq!(a.transcript().to_bytes(), b.transcript().to_bytes());
        let c = run_setup(&SimConfig::new(2, 8, 1, 2)).unwrap();
        assert_ne!(a.transcript().hash(), c.transcript().hash());
    }

    #[test]
    fn eight_senders_get_a_bijection() {
        let sim = run_setup(&SimConfig::new(8, 8, 1, 5)).unwrap();
        let mut pos = sim.positions();
        pos.sort_unstable();
        assert_eq!(pos, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn oversized_corrupt_set_rejected() {
        let mut cfg = SimConfig::new(4, 8, 1, 0);
        cfg.corrupt_senders = BTreeSet::from([0, 1, 2]);
        let err = run_setup(&cfg).unwrap_err();
        assert_eq!(err.source, Error::CorruptSetTooLarge { size: 3, limit: 2 });
    }

    #[test]
    fn epochs_route_to_inverse_permutation() {
        let mut sim = run_setup(&SimConfig::new(4, 8, 2, 11)).unwrap();
        let msgs = [1, 2, 3, 4];
        let out1 = sim.run_epoch(&msgs, Epoch(1)).unwrap();
        assert_eq!(out1, sim.expected_output(&msgs));
        let before = sim.transcript().len();
        let out2 = sim.run_epoch(&msgs, Epoch(2)).unwrap();
        assert_eq!(out1, out2);
        let cts: Vec<_> = sim.transcript().records()[before..]
            .iter()
            .filter(|r| r.message.tag() == tag::CIPHERTEXT)
            .collect();
        let earlier: Vec<_> = sim.transcript().records()[..before]
            .iter()
            .filter(|r| matches!(&r.message, Message::Ciphertext { epoch: 1, .. }))
            .collect();
        assert_eq!(cts.len(), 4);
        for (a, b) in cts.iter().zip(earlier) {
            let (Message::Ciphertext { payload: pa, .. }, Message::Ciphertext { payload: pb, .. }) = (&a.message, &b.message)
            else {
                unreachable!()
            };
            assert_ne!(pa, pb);
        }
    }

    #[test]
    fn replay_fault_is_recorded() {
        let mut cfg = SimConfig::new(3, 8, 2, 4);
        cfg.faults.push(Fault::Replay { epoch: 2 });
        let mut sim = run_setup(&cfg).unwrap();
        sim.run_epoch(&[1, 2, 3], Epoch(1)).unwrap();
        let err = sim.run_epoch(&[1, 2, 3], Epoch(2)).unwrap_err();
        assert_eq!(err.source, Error::ReplayedCiphertext(0));
        let last = sim.transcript().records().last().unwrap();
        assert_eq!(last.message.tag(), tag::ERROR);
    }

    #[test]
    fn corrupted_share_breaks_decoding() {
        let mut cfg = SimConfig::new(3, 8, 1, 4);
        cfg.faults.push(Fault::CorruptShare { sender: 1, epoch: 1 });
        let mut sim = run_setup(&cfg).unwrap();
        let err = sim.run_epoch(&[1, 2, 3], Epoch(1)).unwrap_err();
        assert!(matches!(err.source, Error::DlogOutOfRange { .. }));
    }

    #[test]
    fn reveal_faults_abort_setup() {
        let mut cfg = SimConfig::new(3, 8, 1, 4);
        cfg.faults.push(Fault::BadReveal { sender: 2 });
        let err = run_setup(&cfg).unwrap_err();
        assert_eq!((err.step, err.source), ("commit-reveal", Error::RevealMismatch(2)));
        let mut cfg = SimConfig::new(3, 8, 1, 4);
        cfg.faults.push(Fault::MissingReveal { sender: 0 });
        assert_eq!(run_setup(&cfg).unwrap_err().source, Error::MissingReveal(0));
        let mut cfg = SimConfig::new(3, 8, 1, 4);
        cfg.faults.push(Fault::MissingReveal { sender: 2 });
        assert_eq!(run_setup(&cfg).unwrap_err().source, Error::MissingReveal(2));
    }

    #[test]
    fn corruption_view_contents() {
        let mut cfg = SimConfig::new(5, 8, 1, 9);
        let sim = run_setup(&cfg).unwrap();
        assert!(corruption_view(&cfg, sim.senders()).positions.is_empty());
        cfg.corrupt_senders = BTreeSet::from([3]);
        let view = corruption_view(&cfg, sim.senders());
        assert_eq!(view.positions, vec![(3, sim.positions()[3])]);
        assert_eq!(view.secrets.len(), 1);
        assert_eq!(view.secrets[0].owner(), 3);
        // keys shared with honest senders are part of the corrupted ring
        for j in [0, 1, 2, 4] {
            assert_eq!(view.rings[0].key(j), sim.senders()[j].ring().key(3));
        }
    }

    #[test]
    fn multi_block_payloads_follow_the_permutation() {
        let cfg = SimConfig::new(3, 6, 1, 12);
        let mut sim = run_setup(&cfg).unwrap();
        let payloads = vec![b"hello".to_vec(), b"a longer payload".to_vec(), Vec::new()];
        let got = sim.send_payloads(&payloads).unwrap();
        let pos = sim.positions();
        for (i, p) in payloads.iter().enumerate() {
            assert_eq!(&got[pos[i]], p);
        }
    }

    #[test]
    fn knowledge_partition() {
        let sim = run_setup(&SimConfig::new(6, 8, 1, 3)).unwrap();
        for (i, s) in sim.senders().iter().enumerate() {
            assert_eq!(s.assignment().owner, i);
            assert_eq!(s.secrets().target(), s.assignment().position);
        }
        // Published prime lists carry no sender index.
        for r in sim.transcript().records() {
            if let Message::SortedPrimes { .. } = r.message {
                assert_eq!(r.from, Endpoint::Router);
                assert_eq!(r.to, Endpoint::Broadcast);
            }
        }
    }
}
