//! Regenerates `data/dedup/synthetic_100.csv` and its answer key.
//!
//! 80 clean subscribers plus 20 injected duplicates: typos, nicknames, and
//! phone-format or suffix variants. Run with
//! `cargo run --example gen_dedup_corpus -- <out_dir>`.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use fuzzloc::dedup::{records_from_store, soundex, Matcher, Strategy};
use fuzzloc::store::{SubscriberStore, DEFAULT_TABLE};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const SEED: u64 = 20_240_611;

const NICK_FIRST: &[(&str, &str)] = &[
    ("Robert", "Bob"),
    ("Elizabeth", "Liz"),
    ("William", "Bill"),
    ("Richard", "Rick"),
    ("Margaret", "Peggy"),
    ("Katherine", "Kate"),
    ("Michael", "Mike"),
    ("Thomas", "Tom"),
    ("Patricia", "Trish"),
    ("Christopher", "Chris"),
    ("Rebecca", "Becky"),
    ("Jennifer", "Jenny"),
];

const FIRST: &[&str] = &[
    "Aarav", "Priya", "Ravi", "Lakshmi", "Suresh", "Anjali", "Vikram", "Meera", "Farhan", "Nandini",
    "Olu", "Chidi", "Amara", "Kwame", "Zanele", "Tariq", "Leila", "Omar", "Yusuf", "Hana", "Wei",
    "Mei", "Jun", "Haruto", "Yuki", "Minji", "Soo", "Dmitri", "Olga", "Pavel", "Ingrid", "Lars",
    "Sven", "Astrid", "Mateo", "Lucia", "Diego", "Camila", "Pierre", "Amelie", "Giulia", "Marco",
    "Fatima", "Ibrahim", "Noor", "Selin", "Emre", "Ayla", "Kofi", "Esi",
];

const LAST: &[&str] = &[
    "Sharma", "Iyer", "Reddy", "Nair", "Banerjee", "Khan", "Okafor", "Mensah", "Dlamini", "Haddad",
    "Zhang", "Tanaka", "Kim", "Park", "Ivanova", "Petrov", "Larsen", "Berg", "Lindqvist", "Garcia",
    "Fernandez", "Rossi", "Bianchi", "Dubois", "Moreau", "Yilmaz", "Demir", "Abubakar", "Asante",
    "Quispe", "Novak", "Horvat", "Kowalski", "Wozniak", "Schulz", "Vogel", "Brennan", "Gallagher",
    "Whitfield", "Ashworth", "Pemberton", "Thackeray", "Fairbanks", "Holloway", "Underwood",
    "Mukherjee", "Chaudhary", "Venkataraman", "Oyelaran", "Castellanos", "Fitzgerald", "Yamamoto",
    "Nakashima", "Sorensen", "Eriksson", "Papadopoulos", "Georgiou", "Jablonski", "Lindgren",
    "Marchetti",
];

const COMPANIES: &[&str] = &[
    "Acme Inc.",
    "Globex Corp",
    "Initech Ltd",
    "Umbrella Co",
    "Stark Industries LLC",
    "Wayne Enterprises Inc.",
    "Tata Consultancy Pvt",
    "Soylent Corporation",
    "Hooli Inc.",
    "Vandelay Imports Ltd",
    "Cyberdyne Systems Corp",
    "Oscorp Limited",
];

const STREETS: &[&str] = &[
    "Main", "Oak", "MG", "Park", "Lake", "Hill", "Station", "Church", "Market", "Temple", "Brigade",
    "Residency", "Cunningham", "Richmond",
];
const STREET_SUFFIXES: &[&str] = &["St.", "Road", "Ave", "Lane", "Nagar", "Blvd"];
const DOMAINS: &[&str] = &["mail.com", "inbox.in", "post.net", "webmail.org"];
const LAS: &[&str] = &["1", "2", "3", "4"];

#[derive(Clone)]
struct Person {
    first: String,
    last: String,
    email: String,
    mobile: String,
    imei: String,
    sim: String,
    la: String,
    bill: String,
    company: String,
    street: String,
}

impl Person {
    fn row(&self) -> Vec<String> {
        vec![
            format!("{} {}", self.first, self.last),
            self.imei.clone(),
            self.sim.clone(),
            self.la.clone(),
            self.mobile.clone(),
            self.bill.clone(),
            self.email.clone(),
            self.company.clone(),
            self.street.clone(),
        ]
    }
}

#[derive(Serialize)]
struct InjectedPair {
    original: usize,
    duplicate: usize,
    kind: &'static str,
}

fn digits(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| char::from(b'0' + rng.gen_range(0..10u8))).collect()
}

fn person(rng: &mut ChaCha8Rng, first: &str, last: &str) -> Person {
    Person {
        first: first.to_string(),
        last: last.to_string(),
        email: format!(
            "{}.{}@{}",
            first.to_lowercase(),
            last.to_lowercase(),
            DOMAINS.choose(rng).unwrap()
        ),
        mobile: format!("9{}", digits(rng, 9)),
        imei: format!("35{}", digits(rng, 13)),
        sim: format!("8991{}", digits(rng, 15)),
        la: LAS.choose(rng).unwrap().to_string(),
        bill: rng.gen_range(100..9000).to_string(),
        company: COMPANIES.choose(rng).unwrap().to_string(),
        street: format!(
            "{} {} {}",
            rng.gen_range(1..400),
            STREETS.choose(rng).unwrap(),
            STREET_SUFFIXES.choose(rng).unwrap()
        ),
    }
}

/// One substitution, insertion or deletion at a position past the first
/// letter.
fn typo(rng: &mut ChaCha8Rng, word: &str) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    let pos = rng.gen_range(1..chars.len());
    let letter = char::from(b'a' + rng.gen_range(0..26u8));
    match rng.gen_range(0..3) {
        0 => {
            let old = chars[pos];
            chars[pos] = if letter == old.to_ascii_lowercase() { 'x' } else { letter };
        }
        1 => chars.insert(pos, letter),
        _ => {
            chars.remove(pos);
        }
    }
    chars.into_iter().collect()
}

fn reformat_phone(rng: &mut ChaCha8Rng, m: &str) -> String {
    match rng.gen_range(0..3) {
        0 => format!("({}) {}-{}", &m[..3], &m[3..6], &m[6..]),
        1 => format!("+1 {}-{}-{}", &m[..3], &m[3..6], &m[6..]),
        _ => format!("{} {}", &m[..5], &m[5..]),
    }
}

fn swap_suffix(s: &str) -> String {
    for (a, b) in [
        (" Inc.", " Incorporated"),
        (" Corp", " Corporation"),
        (" Ltd", " Limited"),
        (" St.", " Street"),
        (" Road", " Rd"),
        (" Ave", " Avenue"),
        (" Lane", " Ln"),
        (" Blvd", " Boulevard"),
        (" Nagar", " Ngr"),
    ] {
        if let Some(stem) = s.strip_suffix(a) {
            return format!("{stem}{b}");
        }
    }
    s.to_string()
}

fn build(seed: u64) -> (Vec<Vec<String>>, Vec<InjectedPair>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut people: Vec<Person> = Vec::new();
    let mut codes = BTreeSet::new();
    let mut phones = BTreeSet::new();
    let mut used_last = BTreeSet::new();

    let mut nick = NICK_FIRST.to_vec();
    nick.shuffle(&mut rng);
    let mut firsts: Vec<&str> = nick.iter().map(|(f, _)| *f).collect();
    let mut others = FIRST.to_vec();
    others.shuffle(&mut rng);
    firsts.extend(others);
    let mut lasts = LAST.to_vec();
    lasts.shuffle(&mut rng);

    // Distinct Soundex keys keep clean records from resembling each other.
    let twice: Vec<&str> = firsts.iter().chain(firsts.iter()).copied().collect();
    'outer: for &first in &twice {
        for &last in &lasts {
            let key = (soundex(first), soundex(last));
            if codes.contains(&key) || used_last.contains(last) && used_last.len() < LAST.len() {
                continue;
            }
            let p = person(&mut rng, first, last);
            if !phones.insert(p.mobile.clone()) {
                continue;
            }
            codes.insert(key);
            used_last.insert(last);
            people.push(p);
            if people.len() == 80 {
                break 'outer;
            }
            continue 'outer;
        }
    }
    assert_eq!(people.len(), 80, "name pools too small");

    // (fields, Some((original index, kind)) for injected duplicates)
    let mut rows: Vec<Row> =
        people.iter().map(|p| (p.row(), None)).collect();
    let nick_idx: Vec<usize> = (0..people.len())
        .filter(|&i| NICK_FIRST.iter().any(|(f, _)| *f == people[i].first))
        .collect();
    let mut rest: Vec<usize> = (0..people.len()).filter(|i| !nick_idx.contains(i)).collect();
    rest.shuffle(&mut rng);

    for &i in nick_idx.iter().take(7) {
        let mut d = people[i].clone();
        let short = NICK_FIRST.iter().find(|(f, _)| *f == d.first).unwrap().1;
        d.email = d.email.replacen(&d.first.to_lowercase(), &short.to_lowercase(), 1);
        d.first = short.to_string();
        rows.push((d.row(), Some((i, "nickname"))));
    }
    for &i in rest.iter().take(7) {
        let mut d = people[i].clone();
        if rng.gen_bool(0.5) {
            d.first = typo(&mut rng, &d.first);
        } else {
            d.last = typo(&mut rng, &d.last);
        }
        rows.push((d.row(), Some((i, "typo"))));
    }
    for &i in rest.iter().skip(7).take(6) {
        let mut d = people[i].clone();
        d.mobile = reformat_phone(&mut rng, &d.mobile);
        if rng.gen_bool(0.5) {
            d.company = swap_suffix(&d.company);
        } else {
            d.street = swap_suffix(&d.street);
        }
        rows.push((d.row(), Some((i, "format"))));
    }

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut rng);
    let mut position = vec![0; rows.len()];
    for (new, &old) in order.iter().enumerate() {
        position[old] = new;
    }
    let pairs = rows
        .iter()
        .enumerate()
        .filter_map(|(old, (_, src))| {
            src.map(|(orig, kind)| {
                let (a, b) = (position[orig], position[old]);
                InjectedPair {
                    original: a,
                    duplicate: b,
                    kind,
                }
            })
        })
        .collect();
    let shuffled = order.iter().map(|&o| rows[o].0.clone()).collect();
    (shuffled, pairs)
}

type Row = (Vec<String>, Option<(usize, &'static str)>);

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/dedup".into()));
    let header: Vec<String> = [
        "subscriber_name",
        "imei#",
        "sim#",
        "La",
        "mobile#",
        "bill_payment",
        "email",
        "company",
        "street",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();

    let matcher = Matcher::default();
    for seed in SEED.. {
        let (rows, pairs) = build(seed);
        let store = SubscriberStore::new(DEFAULT_TABLE, header.clone(), rows).unwrap();
        let (_, records) = records_from_store(&store);
        let groups = matcher
            .find_duplicate_groups_with(&records, 0.85, Strategy::BruteForce)
            .unwrap();
        let found: BTreeSet<Vec<usize>> = groups.iter().map(|g| g.members.clone()).collect();
        let want: BTreeSet<Vec<usize>> = pairs
            .iter()
            .map(|p| {
                let mut v = vec![p.original, p.duplicate];
                v.sort_unstable();
                v
            })
            .collect();
        if found != want {
            eprintln!("seed {seed}: grouping differs from the injected pairs, retrying");
            continue;
        }
        fs::create_dir_all(&out).unwrap();
        let mut w = Vec::new();
        store.write_csv(&mut w).unwrap();
        fs::write(out.join("synthetic_100.csv"), w).unwrap();
        let key = serde_json::json!({ "seed": seed, "threshold": 0.85, "pairs": pairs });
        fs::write(
            out.join("synthetic_100_pairs.json"),
            serde_json::to_string_pretty(&key).unwrap() + "\n",
        )
        .unwrap();
        println!("seed {seed}: wrote {} rows, {} pairs", store.len(), pairs.len());
        break;
    }
}
