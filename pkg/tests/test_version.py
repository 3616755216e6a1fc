def test_version():
    import qandysig

    assert isinstance(qandysig.__version__, str)
    assert qandysig.__version__
    assert "unknown" not in qandysig.__version__
