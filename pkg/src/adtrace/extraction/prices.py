"""Price string parsing with currency-symbol detection."""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

# Longest tokens first so "US $" wins over "$".
SYMBOLS: list[tuple[str, str]] = sorted(
    [
        ("US $", "USD"), ("US$", "USD"), ("USD", "USD"),
        ("C $", "CAD"), ("C$", "CAD"), ("CA$", "CAD"), ("CAD", "CAD"),
        ("AU $", "AUD"), ("AU$", "AUD"), ("A$", "AUD"), ("AUD", "AUD"),
        ("NZ$", "NZD"), ("NZD", "NZD"),
        ("HK$", "HKD"), ("HKD", "HKD"),
        ("S$", "SGD"), ("SGD", "SGD"),
        ("R$", "BRL"), ("BRL", "BRL"),
        ("MX$", "MXN"), ("MXN", "MXN"),
        ("£", "GBP"), ("GBP", "GBP"),
        ("€", "EUR"), ("EUR", "EUR"),
        ("¥", "JPY"), ("JPY", "JPY"), ("CNY", "CNY"), ("RMB", "CNY"),
        ("₹", "INR"), ("Rs.", "INR"), ("INR", "INR"),
        ("zł", "PLN"), ("PLN", "PLN"),
        ("Kč", "CZK"), ("CZK", "CZK"),
        ("₽", "RUB"), ("RUB", "RUB"),
        ("₩", "KRW"), ("KRW", "KRW"),
        ("฿", "THB"), ("THB", "THB"),
        ("₱", "PHP"), ("PHP", "PHP"),
        ("RM", "MYR"), ("MYR", "MYR"),
        ("CHF", "CHF"), ("Fr.", "CHF"),
        ("SEK", "SEK"), ("NOK", "NOK"), ("DKK", "DKK"),
        ("TL", "TRY"), ("₺", "TRY"), ("TRY", "TRY"),
        ("ZAR", "ZAR"),
        ("$", "USD"),
    ],
    key=lambda kv: -len(kv[0]),
)
AMBIGUOUS = {"$", "¥"}

# Currencies whose usual locale writes 1.500,00
COMMA_DECIMAL = frozenset({
    "EUR", "BRL", "PLN", "CZK", "RUB", "SEK", "NOK", "DKK", "TRY", "ZAR",
})

_NUMBER = re.compile(r"\d[\d.,'   ]*")
_CODE = re.compile(r"^[A-Z]{3}$")


@dataclass(frozen=True)
class ParsedPrice:
    amount: Decimal
    currency: str | None
    ambiguous_symbol: bool = False


def normalize_currency(value) -> str | None:
    if value is None:
        return None
    text = str(value).strip().upper()
    return text if _CODE.match(text) else None


def detect_currency(text: str) -> tuple[str | None, bool]:
    for token, code in SYMBOLS:
        if token.isalpha():
            if re.search(rf"(?<![A-Za-z]){re.escape(token)}(?![A-Za-z])", text):
                return code, False
        elif token in text:
            return code, token in AMBIGUOUS
    return None, False


def parse_amount(raw: str, currency: str | None = None) -> Decimal | None:
    """Parse ``1,500.00`` / ``1.500,00`` style numbers.

    When only one separator kind occurs once with exactly three trailing digits it
    is ambiguous; the currency's locale decides, otherwise it is read as a
    thousands separator.
    """
    digits = re.sub(r"[\s'  ]", "", raw).strip(".,")
    if not digits or not re.fullmatch(r"[\d.,]+", digits):
        return None
    commas, dots = digits.count(","), digits.count(".")
    if commas and dots:
        decimal_sep = "," if digits.rfind(",") > digits.rfind(".") else "."
    elif commas or dots:
        sep = "," if commas else "."
        count = commas or dots
        tail = digits.rsplit(sep, 1)[1]
        if count > 1:
            decimal_sep = None
        elif len(tail) != 3:
            decimal_sep = sep
        elif currency is not None:
            decimal_sep = "," if currency in COMMA_DECIMAL else "."
            if decimal_sep != sep:
                decimal_sep = None
        else:
            decimal_sep = None
    else:
        decimal_sep = None
    if decimal_sep is None:
        number = digits.replace(",", "").replace(".", "")
    else:
        thousands = "." if decimal_sep == "," else ","
        intpart, frac = digits.rsplit(decimal_sep, 1)
        if decimal_sep in intpart:
            return None
        number = intpart.replace(thousands, "") + "." + frac
    try:
        value = Decimal(number)
    except InvalidOperation:
        return None
    return value if value.is_finite() and value >= 0 else None


def parse_price(text, currency_hint: str | None = None) -> ParsedPrice | None:
    if text is None:
        return None
    if isinstance(text, Decimal):
        return ParsedPrice(text, currency_hint) if text.is_finite() and text >= 0 else None
    if isinstance(text, (int, float)):
        if isinstance(text, bool):
            return None
        try:
            value = Decimal(str(text))
        except InvalidOperation:
            return None
        return ParsedPrice(value, currency_hint) if value.is_finite() and value >= 0 else None
    text = str(text)
    if re.match(r"^\D*-\s*\d", text):
        return None
    symbol_currency, ambiguous = detect_currency(text)
    currency = currency_hint or symbol_currency
    m = _NUMBER.search(text)
    if not m:
        return None
    amount = parse_amount(m.group(0), currency)
    if amount is None:
        return None
    return ParsedPrice(amount, currency, ambiguous and currency_hint is None)
