import qandysig

# -*- coding: utf-8 -*-
#
# Configuration file for the Sphinx documentation builder.
#
# http://www.sphinx-doc.org/en/master/config

# -- Project information -----------------------------------------------------

project = "qandysig"
copyright = "2020, the qandysig developers"
author = "the qandysig developers"

# The short X.Y version
version = ".".join(qandysig.__version__.split(".")[:2])
# The full version, including alpha/beta/rc tags
release = qandysig.__version__


# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx.ext.viewcode",
    "sphinx.ext.autosummary",
    "numpydoc",
]

templates_path = ["_templates"]
source_suffix = [".rst"]
master_doc = "index"
language = None
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]
pygments_style = None

# numpydoc would otherwise list every attribute of the dataclasses twice
numpydoc_show_class_members = False


# -- Options for HTML output -------------------------------------------------

html_theme = "sphinx_rtd_theme"
htmlhelp_basename = "qandysigdoc"


# -- Options for LaTeX output ------------------------------------------------

latex_documents = [
    (master_doc, "qandysig.tex", "qandysig Documentation", author, "manual")
]

man_pages = [(master_doc, "qandysig", "qandysig Documentation", [author], 1)]


# -- Extension configuration -------------------------------------------------

intersphinx_mapping = {
    "https://docs.python.org/": None,
    "https://numpy.org/doc/stable/": None,
}
