"""
Report rendering: one line per record.

Text output renders ``<kind>.jinja2`` from the templates package; json-lines output
writes the same record as a JSON object tagged with its kind.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import jinja2

from algdyn.config import get_template_path

OUTPUT_FORMATS = ('text', 'json-lines')


def _flag(value: Any) -> str:
    return 'true' if value else 'false'


def _bracket(values) -> str:
    return '[' + ','.join(str(v) for v in values) + ']'


class ReportRenderer:
    """Render report records as text lines or JSON lines"""

    def __init__(self, output_format: str = 'text', templates_dir: Optional[str] = None):
        if output_format not in OUTPUT_FORMATS:
            raise ValueError(f"unknown output format {output_format!r}, expected one of {OUTPUT_FORMATS}")
        self.output_format = output_format
        self.templates_dir = Path(templates_dir or Path(get_template_path('defaults.toml')).parent)
        self.loader = jinja2.FileSystemLoader(str(self.templates_dir))
        self.env = jinja2.Environment(
            loader=self.loader,
            trim_blocks=True,
            lstrip_blocks=True,
            undefined=jinja2.StrictUndefined,
        )
        self.env.filters['flag'] = _flag
        self.env.filters['bracket'] = _bracket

    def render_text(self, kind: str, fields: Dict[str, Any]) -> str:
        template = self.env.get_template(f'{kind}.jinja2')
        return template.render(**fields).strip()

    def render_json(self, kind: str, fields: Dict[str, Any]) -> str:
        record = {'record': kind}
        record.update(fields)
        return json.dumps(record, sort_keys=True, default=str)

    def render(self, kind: str, **fields: Any) -> str:
        """One report line for a record of the given kind."""
        if self.output_format == 'json-lines':
            return self.render_json(kind, fields)
        return self.render_text(kind, fields)

    def get_template_names(self) -> List[str]:
        """Get list of record kinds with a text template"""
        return sorted(f.stem for f in self.templates_dir.glob('*.jinja2'))
