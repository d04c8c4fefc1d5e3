# Services package: ingestion, measure dispatch, reports, axiom verification
