//! String format detectors.
//!
//! | format      | accepted strings                                               |
//! |-------------|----------------------------------------------------------------|
//! | `uuid`      | `8-4-4-4-12` hexadecimal groups                                |
//! | `date-time` | RFC 3339 date-time (`2024-01-31T12:00:00Z`, offset required)   |
//! | `date`      | RFC 3339 full-date `YYYY-MM-DD` naming a real calendar day     |
//! | `time`      | RFC 3339 full-time `HH:MM:SS[.frac](Z|±HH:MM)`                 |
//! | `ipv4`      | dotted quad, no leading zeros                                  |
//! | `ipv6`      | any textual IPv6 address accepted by `std::net::Ipv6Addr`      |
//! | `email`     | `local@domain.tld` with an RFC 5322 dot-atom-ish local part    |
//! | `uri`       | absolute URI with a scheme, no whitespace                      |
//!
//! Detection tries the formats in the order above and reports the first hit.

use std::fmt;
use std::net::{Ipv4Addr, Ipv6Addr};
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StringFormat {
    Uuid,
    DateTime,
    Date,
    Time,
    Ipv4,
    Ipv6,
    Email,
    Uri,
}

impl StringFormat {
    pub const DETECTION_ORDER: [StringFormat; 8] = [
        StringFormat::Uuid,
        StringFormat::DateTime,
        StringFormat::Date,
        StringFormat::Time,
        StringFormat::Ipv4,
        StringFormat::Ipv6,
        StringFormat::Email,
        StringFormat::Uri,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StringFormat::Uuid => "uuid",
            StringFormat::DateTime => "date-time",
            StringFormat::Date => "date",
            StringFormat::Time => "time",
            StringFormat::Ipv4 => "ipv4",
            StringFormat::Ipv6 => "ipv6",
            StringFormat::Email => "email",
            StringFormat::Uri => "uri",
        }
    }

    pub fn from_name(name: &str) -> Option<StringFormat> {
        Self::DETECTION_ORDER.into_iter().find(|f| f.name() == name)
    }

    pub fn matches(self, s: &str) -> bool {
        match self {
            StringFormat::Uuid => UUID.is_match(s),
            StringFormat::DateTime => chrono::DateTime::parse_from_rfc3339(s).is_ok() && s.contains(['T', 't']),
            StringFormat::Date => {
                DATE.is_match(s) && chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
            }
            StringFormat::Time => is_time(s),
            StringFormat::Ipv4 => Ipv4Addr::from_str(s).is_ok(),
            StringFormat::Ipv6 => Ipv6Addr::from_str(s).is_ok(),
            StringFormat::Email => EMAIL.is_match(s),
            StringFormat::Uri => !s.chars().any(char::is_whitespace) && url::Url::parse(s).is_ok(),
        }
    }

    /// The first format in detection order that accepts `s`.
    pub fn detect(s: &str) -> Option<StringFormat> {
        Self::DETECTION_ORDER.into_iter().find(|f| f.matches(s))
    }
}

impl fmt::Display for StringFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

static UUID: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}$").unwrap()
});
static DATE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[0-9]{4}-[0-9]{2}-[0-9]{2}$").unwrap());
static TIME: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^([0-9]{2}):([0-9]{2}):([0-9]{2})(\.[0-9]+)?([Zz]|[+-]([0-9]{2}):([0-9]{2}))$").unwrap()
});
static EMAIL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^[A-Za-z0-9!#$%&'*+/=?^_`{|}~-]+(\.[A-Za-z0-9!#$%&'*+/=?^_`{|}~-]+)*@[A-Za-z0-9]([A-Za-z0-9-]*[A-Za-z0-9])?(\.[A-Za-z0-9]([A-Za-z0-9-]*[A-Za-z0-9])?)+$",
    )
    .unwrap()
});

fn is_time(s: &str) -> bool {
    let Some(caps) = TIME.captures(s) else { return false };
    let field = |i: usize| caps.get(i).map(|m| m.as_str().parse::<u32>().unwrap_or(99));
    let (h, m, sec) = (field(1).unwrap_or(99), field(2).unwrap_or(99), field(3).unwrap_or(99));
    let offset_ok = match (field(6), field(7)) {
        (Some(oh), Some(om)) => oh < 24 && om < 60,
        _ => true,
    };
    h < 24 && m < 60 && sec <= 60 && offset_ok
}
