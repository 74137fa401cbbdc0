"""Report templates and bundled defaults for algdyn."""