from pathlib import Path

import setup


class TestSetupHelpers:

    def test_pins_are_read_with_comments(self, tmp_path):
        path = tmp_path / 'requirements.txt'
        path.write_text("# Numerical Methods\nscipy==1.12.0\n\nnumpy==1.26.3  # arrays\n")
        assert setup.pinned_requirements(path) == [('scipy', '1.12.0'), ('numpy', '1.26.3')]

    def test_repository_pins_cover_the_stack(self):
        pins = setup.pinned_requirements(Path(setup.__file__).parent / 'requirements.txt')
        names = {name for name, _ in pins}
        assert {'numpy', 'scipy', 'pandas', 'pydantic', 'plotly', 'python-dotenv',
                'tqdm', 'pytest'} <= names

    def test_env_is_created_from_template(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        (tmp_path / '.env.example').write_text("HYPERBOLIC_SEED=7\nHYPERBOLIC_LOG_LEVEL=INFO\n")
        setup.merge_env_file()
        assert (tmp_path / '.env').read_text() == "HYPERBOLIC_SEED=7\nHYPERBOLIC_LOG_LEVEL=INFO\n"

    def test_existing_settings_are_kept(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        (tmp_path / '.env.example').write_text("HYPERBOLIC_SEED=7\nHYPERBOLIC_LOG_LEVEL=INFO\n")
        (tmp_path / '.env').write_text("HYPERBOLIC_SEED=11")
        setup.merge_env_file()
        assert (tmp_path / '.env').read_text() == "HYPERBOLIC_SEED=11\nHYPERBOLIC_LOG_LEVEL=INFO\n"
