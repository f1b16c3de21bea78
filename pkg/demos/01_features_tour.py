# A tour of URL normalization and the 36-feature extractor.
#
# Run: python3 demos/01_features_tour.py

from phishkit import FEATURE_NAMES, extract_features, normalize_url, shannon_entropy
from phishkit.urlnorm import registrable_domain

URLS = [
    "EXAMPLE.com",                                            # gets scheme + lowercase
    "https://example.com/",
    "http://login-verify.secure-bank.tk/update?acct=1",       # keyword soup
    "http://192.168.0.1:8080/admin",                          # IP host + port
    "http://paypal.com.account-check.evil.xyz/signin#step2",  # deceptive subdomains
]

for raw in URLS:
    p = normalize_url(raw)
    print(f"\n{raw!r}")
    print(f"  normalized:         {p.normalized}")
    print(f"  host/path/query:    {p.host!r} {p.path!r} {p.query!r}")
    print(f"  registrable domain: {registrable_domain(p)}")

    fv = extract_features(p)
    interesting = [
        "url_length", "num_dots", "num_hyphens", "digit_letter_ratio",
        "has_https", "has_ip_host", "suspicious_tld", "entropy_host",
        "num_keywords_total", "length_bucket",
    ]
    for name in interesting:
        print(f"  {name:24s} {fv[name]:.4f}")

print("\nShannon entropy intuition (bits per byte distribution):")
for s in ["aaaa", "ab", "abcdefgh", "paypal", "xj3k9z2q"]:
    print(f"  {s!r:12s} -> {shannon_entropy(s):.3f}")

print(f"\nThe full schema holds {len(FEATURE_NAMES)} features; see features.md.")
