from .html import ParsedPage, extract_title_text, parse_html
from .merge import ProductFields, merge_product_fields
from .metadata import MetadataEntry, MetadataSet, extract_embedded_metadata

__all__ = [
    "MetadataEntry",
    "MetadataSet",
    "ParsedPage",
    "ProductFields",
    "extract_embedded_metadata",
    "extract_title_text",
    "merge_product_fields",
    "parse_html",
]
