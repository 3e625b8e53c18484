from .visit_cleaner import CleaningReport, VisitCleaner, clean_visits, impute_esi
