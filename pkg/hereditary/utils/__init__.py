from hereditary.utils.files import (
    ModelFile, RunReport, atomic_write_text, read_csv, read_model, write_csv, write_model, write_report
)
