use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use super::cache::CacheEntry;
use super::{Adapter, AdapterConfig, CacheStore, Clock, FetchError, HttpClient, Mode, SourceError, SystemClock, UreqClient};
use crate::extraction::{extract_entries, transform_to_canonical, MediaKind, RawDocument, ScholarRecord};
use crate::text::slug;

/// Characters left alone when encoding a single query term.
const TERM: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

/// Shared fetch machinery: transport, clock, optional cache, and the time
/// of the last live request per source.
pub struct FetchContext {
    http: Arc<dyn HttpClient>,
    clock: Arc<dyn Clock>,
    cache: Option<CacheStore>,
    last_request: Mutex<HashMap<String, Arc<Mutex<Option<u64>>>>>,
}

impl Default for FetchContext {
    fn default() -> Self {
        Self::new(Arc::new(UreqClient::default()), Arc::new(SystemClock), None)
    }
}

impl std::fmt::Debug for FetchContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FetchContext").field("cache", &self.cache).finish_non_exhaustive()
    }
}

impl FetchContext {
    pub fn new(http: Arc<dyn HttpClient>, clock: Arc<dyn Clock>, cache: Option<CacheStore>) -> Self {
        Self {
            http,
            clock,
            cache,
            last_request: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_cache(cache: CacheStore) -> Self {
        Self::new(Arc::new(UreqClient::default()), Arc::new(SystemClock), Some(cache))
    }

    pub fn cache(&self) -> Option<&CacheStore> {
        self.cache.as_ref()
    }

    fn slot(&self, source_id: &str) -> Arc<Mutex<Option<u64>>> {
        let mut map = self.last_request.lock().unwrap_or_else(|e| e.into_inner());
        map.entry(source_id.to_string()).or_default().clone()
    }
}

/// A fetched document and whether it came from the cache.
#[derive(Debug, Clone, PartialEq)]
pub struct FetchedPage {
    pub doc: RawDocument,
    pub from_cache: bool,
}

/// Result of one adapter run. Failures are per page and never abort the
/// outcome.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FetchOutcome {
    pub records: Vec<ScholarRecord>,
    pub pages_fetched: usize,
    /// (1-based page index, message)
    pub errors: Vec<(usize, String)>,
    pub from_cache: Vec<bool>,
    /// Extraction and canonicalization notes, prefixed by page.
    pub warnings: Vec<String>,
}

/// Request url for `page` (1-based). Terms are percent-encoded one by one
/// and joined with `+`.
pub fn build_url(cfg: &AdapterConfig, terms: &[String], page: usize) -> String {
    let joined = terms
        .iter()
        .map(|t| utf8_percent_encode(t, TERM).to_string())
        .collect::<Vec<_>>()
        .join("+");
    let path = cfg
        .query_template
        .replace("{terms}", &joined)
        .replace("{page}", &page.to_string());
    if path.starts_with("http://") || path.starts_with("https://") {
        path
    } else {
        format!("{}{}", cfg.base_url, path)
    }
}

/// One GET through the cache. A fresh cache entry short-circuits the
/// network; otherwise the request waits out the source's politeness
/// interval first.
pub fn fetch_page(cfg: &AdapterConfig, url: &str, ctx: &FetchContext) -> Result<FetchedPage, FetchError> {
    url::Url::parse(url).map_err(|_| FetchError::BadUrl(url.to_string()))?;
    let now_s = ctx.clock.now_ms() / 1000;
    if let Some(cache) = &ctx.cache {
        if let Some(hit) = cache.get(url, now_s)? {
            return Ok(FetchedPage {
                doc: RawDocument {
                    source_id: cfg.source_id.clone(),
                    url: url.to_string(),
                    media_kind: hit.media_kind,
                    body: hit.body,
                    fetched_at: hit.fetched_at,
                },
                from_cache: true,
            });
        }
    }

    let slot = ctx.slot(&cfg.source_id);
    let mut last = slot.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(prev) = *last {
        let ready = prev + cfg.min_request_interval_ms;
        let now = ctx.clock.now_ms();
        if now < ready {
            ctx.clock.sleep_ms(ready - now);
        }
    }
    *last = Some(ctx.clock.now_ms());
    let header = cfg.header.as_ref().map(|(k, v)| (k.as_str(), v.as_str()));
    let resp = ctx.http.get(url, Duration::from_millis(cfg.timeout_ms), header);
    drop(last);
    let resp = resp?;
    if !(200..300).contains(&resp.status) {
        return Err(FetchError::HttpStatus(resp.status));
    }

    let media_kind = MediaKind::detect(resp.content_type.as_deref(), &resp.body);
    let fetched_at = ctx.clock.now_ms() / 1000;
    if let Some(cache) = &ctx.cache {
        cache.put(
            url,
            &CacheEntry {
                fetched_at,
                media_kind,
                body: resp.body.clone(),
            },
        )?;
    }
    Ok(FetchedPage {
        doc: RawDocument {
            source_id: cfg.source_id.clone(),
            url: url.to_string(),
            media_kind,
            body: resp.body,
            fetched_at,
        },
        from_cache: false,
    })
}

/// What a page contributed: number of entries and the pagination target.
fn absorb(out: &mut FetchOutcome, adapter: &Adapter, page: usize, doc: &RawDocument) -> Option<(usize, Option<String>)> {
    let idoc = match extract_entries(doc, &adapter.rules) {
        Ok(d) => d,
        Err(e) => {
            out.errors.push((page, e.to_string()));
            return None;
        }
    };
    let canon = transform_to_canonical(&idoc);
    out.warnings
        .extend(idoc.warnings.iter().chain(&canon.warnings).map(|w| format!("page {page}: {w}")));
    let n = canon.records.len();
    out.records.extend(canon.records);
    Some((n, idoc.next_page))
}

/// Fetches up to `max_pages` pages for `terms` and canonicalizes them.
/// Stops early at the first page with no entries, and at the first failed
/// page.
pub fn run_adapter(adapter: &Adapter, terms: &[String], ctx: &FetchContext) -> Result<FetchOutcome, SourceError> {
    let cfg = &adapter.config;
    if terms.iter().all(|t| t.trim().is_empty()) {
        return Err(SourceError::Config {
            path: cfg.source_id.clone(),
            message: "no query terms".into(),
        });
    }
    Ok(match cfg.mode {
        Mode::Fixture => run_fixture(adapter, terms),
        Mode::Live => run_live(adapter, terms, ctx),
    })
}

fn fixture_pages_dir(cfg: &AdapterConfig, terms: &[String]) -> Option<PathBuf> {
    let slug = slug(terms);
    let safe = !slug.is_empty() && slug.chars().all(|c| c.is_alphanumeric() || c == '-' || c == '_');
    Some(cfg.fixture_dir.as_ref()?.join(slug)).filter(|_| safe)
}

fn run_fixture(adapter: &Adapter, terms: &[String]) -> FetchOutcome {
    let cfg = &adapter.config;
    let mut out = FetchOutcome::default();
    let Some(dir) = fixture_pages_dir(cfg, terms) else {
        return out;
    };
    let ext = adapter.rules.media.extension();
    for page in 1..=cfg.max_pages {
        let path = dir.join(format!("page{page}.{ext}"));
        let body = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => break,
            Err(e) => {
                out.errors.push((page, format!("{}: {e}", path.display())));
                break;
            }
        };
        let doc = RawDocument {
            source_id: cfg.source_id.clone(),
            url: format!("fixture:{}", path.display()),
            media_kind: adapter.rules.media,
            body,
            fetched_at: 0,
        };
        out.pages_fetched += 1;
        out.from_cache.push(false);
        match absorb(&mut out, adapter, page, &doc) {
            Some((n, _)) if n > 0 => {}
            _ => break,
        }
    }
    out
}

fn run_live(adapter: &Adapter, terms: &[String], ctx: &FetchContext) -> FetchOutcome {
    let cfg = &adapter.config;
    let mut out = FetchOutcome::default();
    let mut url = build_url(cfg, terms, 1);
    for page in 1..=cfg.max_pages {
        let fetched = match fetch_page(cfg, &url, ctx) {
            Ok(p) => p,
            Err(e) => {
                out.errors.push((page, e.to_string()));
                break;
            }
        };
        out.pages_fetched += 1;
        out.from_cache.push(fetched.from_cache);
        let next = match absorb(&mut out, adapter, page, &fetched.doc) {
            Some((n, next)) if n > 0 => next,
            _ => break,
        };
        url = match next {
            Some(link) => match url::Url::parse(&url).and_then(|base| base.join(&link)) {
                Ok(u) => u.to_string(),
                Err(_) => {
                    out.warnings.push(format!("page {page}: bad next-page link `{link}`"));
                    break;
                }
            },
            None if cfg.query_template.contains("{page}") => build_url(cfg, terms, page + 1),
            None => break,
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use std::path::Path;
    use std::sync::atomic::{AtomicU64, Ordering};

    use super::*;
    use crate::extraction::ExtractionRuleSet;
    use crate::sources::HttpResponse;

    fn sources() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../sources")
    }

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn url_template() {
        let a = Adapter::load(sources().join("ieee_xplore/adapter.conf")).unwrap();
        assert_eq!(
            build_url(&a.config, &words("c++ data/mining é"), 2),
            "https://ieeexplore.ieee.org/search/searchresult.jsp?queryText=c%2B%2B+data%2Fmining+%C3%A9&pageNumber=2"
        );
    }

    #[test]
    fn fixture_remote_sensing() {
        let a = Adapter::load(sources().join("fixture_corpus/adapter.conf")).unwrap();
        let out = run_adapter(&a, &words("remote sensing"), &FetchContext::default()).unwrap();
        assert_eq!(out.records.len(), 9);
        assert!(out.errors.is_empty());
        let front = "2002 IEEE International Geoscience and Remote Sensing Symposium [front matter]";
        assert_eq!(out.records.iter().filter(|r| r.title == front).count(), 5);
    }

    #[test]
    fn fixture_pages_follow_in_order() {
        let a = Adapter::load(sources().join("fixture_corpus/adapter.conf")).unwrap();
        let out = run_adapter(&a, &words("neural networks"), &FetchContext::default()).unwrap();
        assert_eq!(out.pages_fetched, 2);
        assert_eq!(out.records.len(), 12);
        let mut one_page = a.clone();
        one_page.config.max_pages = 1;
        let out = run_adapter(&one_page, &words("neural networks"), &FetchContext::default()).unwrap();
        assert_eq!((out.pages_fetched, out.records.len()), (1, 7));
    }

    #[test]
    fn fixture_unknown_query_is_empty() {
        let a = Adapter::load(sources().join("fixture_corpus/adapter.conf")).unwrap();
        for q in ["quantum basket weaving", "../ieee_xplore", "a/b"] {
            let out = run_adapter(&a, &words(q), &FetchContext::default()).unwrap();
            assert_eq!(out, FetchOutcome::default(), "{q}");
        }
        assert!(run_adapter(&a, &[], &FetchContext::default()).is_err());
    }

    /// Serves canned pages and logs request times against a fake clock.
    struct Fake {
        now: AtomicU64,
        log: Mutex<Vec<(u64, String)>>,
        pages: HashMap<String, HttpResponse>,
    }

    impl Clock for Fake {
        fn now_ms(&self) -> u64 {
            self.now.load(Ordering::SeqCst)
        }
        fn sleep_ms(&self, ms: u64) {
            self.now.fetch_add(ms, Ordering::SeqCst);
        }
    }

    impl HttpClient for Fake {
        fn get(&self, url: &str, _: Duration, _: Option<(&str, &str)>) -> Result<HttpResponse, FetchError> {
            self.log.lock().unwrap().push((self.now_ms(), url.to_string()));
            self.now.fetch_add(3, Ordering::SeqCst); // request latency
            self.pages.get(url).cloned().ok_or(FetchError::HttpStatus(404))
        }
    }

    fn fake(pages: Vec<(&str, &str)>) -> Arc<Fake> {
        Arc::new(Fake {
            now: AtomicU64::new(1_000_000),
            log: Mutex::new(Vec::new()),
            pages: pages
                .into_iter()
                .map(|(u, b)| {
                    let r = HttpResponse {
                        status: 200,
                        content_type: Some("application/json".into()),
                        body: b.as_bytes().to_vec(),
                    };
                    (u.to_string(), r)
                })
                .collect(),
        })
    }

    fn live_adapter(interval: u64, max_pages: usize) -> Adapter {
        let cfg = AdapterConfig::from_conf(
            &format!(
                "[adapter]\nsource_id = j\nbase_url = https://api.example.org\n\
                 query_template = /works?search={{terms}}&page={{page}}\nmode = live\n\
                 max_pages = {max_pages}\nmin_request_interval_ms = {interval}\n"
            ),
            Path::new("."),
        )
        .unwrap();
        let rules = ExtractionRuleSet::from_conf(
            "[ruleset]\nsource_id = j\nmedia = json\nsyntax = jsonpath\nrecord = $.results[*]\n\
             [field.title]\nrule = $.t\n",
        )
        .unwrap();
        Adapter::new(cfg, rules).unwrap()
    }

    const P: &str = r#"{"results":[{"t":"x"}]}"#;

    #[test]
    fn politeness_interval_between_live_requests() {
        let f = fake(vec![
            ("https://api.example.org/works?search=a&page=1", P),
            ("https://api.example.org/works?search=a&page=2", P),
            ("https://api.example.org/works?search=a&page=3", r#"{"results":[]}"#),
        ]);
        let ctx = FetchContext::new(f.clone(), f.clone(), None);
        let out = run_adapter(&live_adapter(250, 5), &words("a"), &ctx).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.pages_fetched, 3);
        let log = f.log.lock().unwrap();
        assert_eq!(log.len(), 3);
        assert!(log.windows(2).all(|w| w[1].0 - w[0].0 >= 250), "{log:?}");
    }

    #[test]
    fn cache_hit_skips_network() {
        let f = fake(vec![("https://api.example.org/p", P)]);
        let dir = tempfile::tempdir().unwrap();
        let ctx = FetchContext::new(f.clone(), f.clone(), Some(CacheStore::new(dir.path(), Duration::from_secs(60))));
        let cfg = live_adapter(0, 1).config;
        let first = fetch_page(&cfg, "https://api.example.org/p", &ctx).unwrap();
        let second = fetch_page(&cfg, "https://api.example.org/p", &ctx).unwrap();
        assert!(!first.from_cache && second.from_cache);
        assert_eq!(first.doc.body, second.doc.body);
        assert_eq!(f.log.lock().unwrap().len(), 1);

        let zero = FetchContext::new(f.clone(), f.clone(), Some(CacheStore::new(dir.path(), Duration::ZERO)));
        assert!(!fetch_page(&cfg, "https://api.example.org/p", &zero).unwrap().from_cache);
        assert!(!fetch_page(&cfg, "https://api.example.org/p", &zero).unwrap().from_cache);
        assert_eq!(f.log.lock().unwrap().len(), 3);
    }

    #[test]
    fn status_errors() {
        let f = fake(vec![]);
        let ctx = FetchContext::new(f.clone(), f.clone(), None);
        let cfg = live_adapter(0, 1).config;
        assert_eq!(fetch_page(&cfg, "https://api.example.org/missing", &ctx).unwrap_err(), FetchError::HttpStatus(404));
        assert!(matches!(fetch_page(&cfg, "not a url", &ctx), Err(FetchError::BadUrl(_))));
    }

    #[test]
    fn unreachable_host_degrades_to_page_errors() {
        let mut a = live_adapter(0, 3);
        a.config.base_url = "http://127.0.0.1:9".into(); // discard port, nothing listens
        a.config.timeout_ms = 2000;
        let out = run_adapter(&a, &words("x"), &FetchContext::default()).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.pages_fetched, 0);
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].0, 1);
    }
}
